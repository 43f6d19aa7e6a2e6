"""Stage 1: coarse control -> smooth, diverse future root trajectory.

``sample_trajectory`` runs the single-step trajectory diffusion model (pure
noise in, deterministic posterior mean out). ``blend_trajectories``
implements the runtime blending of a fresh plan with the remainder of the
previous plan: a cubic smoothstep ramp over the blend horizon for positions
and shortest-arc yaw interpolation, which keeps the executed trajectory
C0-continuous when plans are swapped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from . import frames as fr
from .canonical import CanonicalFrame
from .diffusion import DiffusionSchedule, make_schedule, reverse_step
from .networks import TrajectoryDenoiser
from .rotation import slerp_yaw, yaw_from_rot6d, yaw_to_rot6d

MAX_SPEED = 8.0
REPLAN_FRAMES = 15
BLEND_HORIZON = 15


@dataclass(frozen=True)
class ControlInput:
    skill: fr.SkillLabel
    direction: np.ndarray  # (2,) ground-plane, unit when speed > 0
    speed: float           # m/s, clamped to [0, MAX_SPEED]

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        s = float(np.clip(self.speed, 0.0, MAX_SPEED))
        if s > 0.0:
            norm = np.linalg.norm(d)
            if norm < 1e-9:
                raise ValueError("direction must be nonzero when speed > 0")
            d = d / norm
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "speed", s)


@dataclass(frozen=True)
class TargetPoint:
    vector: np.ndarray  # (8,) TrajectoryFrame layout


HOLD_FACING_SKILLS = (fr.SkillLabel.STAND, fr.SkillLabel.CELEBRATE)


def make_target(ctrl: ControlInput, current: fr.TrajectoryFrame, future_frames: int = 45,
                fps: float = 30.0) -> TargetPoint:
    """Target = current ground position displaced by speed * direction over
    the plan horizon; facing aligned with the direction (held for
    stationary skills or zero speed)."""
    horizon = future_frames / fps
    pos = np.asarray(current.ground_pos, dtype=np.float64) + ctrl.speed * ctrl.direction * horizon
    if ctrl.speed > 0.0 and ctrl.skill not in HOLD_FACING_SKILLS:
        facing = yaw_to_rot6d(float(np.arctan2(ctrl.direction[1], ctrl.direction[0])))
    else:
        facing = np.asarray(current.facing, dtype=np.float64).copy()
    return TargetPoint(vector=np.concatenate([pos, facing]))


def sample_trajectory(
    model: TrajectoryDenoiser,
    skill: fr.SkillLabel,
    target: TargetPoint,
    past: np.ndarray,
    seed: int,
    sched: DiffusionSchedule | None = None,
) -> np.ndarray:
    """One single-step reverse draw -> (F, 8) plan in the caller's frame.

    ``past`` is (P, 8) in the same (canonical) frame as the target. Fixed
    seeds give bit-identical outputs; different seeds give different plans.
    """
    sched = sched or make_schedule(1, "linear")
    gen = torch.Generator().manual_seed(seed)
    dtype = next(model.parameters()).dtype
    eps = torch.randn((1, model.future_frames, fr.TRAJ_DIM), generator=gen).to(dtype)
    with torch.inference_mode():
        pred = model(
            eps,
            torch.tensor([float(skill)]),
            torch.as_tensor(target.vector, dtype=dtype).unsqueeze(0),
            torch.as_tensor(past, dtype=dtype).unsqueeze(0),
        )
        out = reverse_step(eps, pred, 1, sched)
    return out[0].to(torch.float64).numpy()


@dataclass
class BlendState:
    """Remembers the previous plan and how much of it has been executed."""

    previous_plan: np.ndarray | None = None  # (F, 8)
    frames_consumed: int = 0
    blend_horizon: int = BLEND_HORIZON

    def remaining(self) -> np.ndarray | None:
        if self.previous_plan is None:
            return None
        return self.previous_plan[self.frames_consumed:]


def _row_yaw(rows: np.ndarray) -> np.ndarray:
    return yaw_from_rot6d(rows[:, 2:])


def blend_trajectories(state: BlendState, fresh: np.ndarray) -> np.ndarray:
    """Blend the fresh plan with the unexecuted remainder of the previous
    plan. w ramps 0 -> 1 with a cubic smoothstep over the horizon, so frame 0
    equals the previous plan's next frame (C0) and frames beyond the horizon
    follow the fresh plan exactly."""
    fresh = np.asarray(fresh, dtype=np.float64)
    prev = state.remaining()
    if prev is None or len(prev) == 0:
        return fresh.copy()
    out = fresh.copy()
    h = max(1, min(state.blend_horizon, len(prev)))
    yaw_prev = _row_yaw(prev[:h])
    yaw_fresh = _row_yaw(fresh[:h])
    for i in range(h):
        s = i / state.blend_horizon
        w = s * s * (3.0 - 2.0 * s)
        out[i, :2] = (1.0 - w) * prev[i, :2] + w * fresh[i, :2]
        out[i, 2:] = yaw_to_rot6d(slerp_yaw(float(yaw_prev[i]), float(yaw_fresh[i]), w))
    return out


@dataclass
class TrajectoryPlanner:
    """Owns the blend state and replanning cadence for one session."""

    model: TrajectoryDenoiser
    seed: int = 0
    state: BlendState = field(default_factory=BlendState)
    _draws: int = 0

    def plan(self, ctrl: ControlInput, current: fr.TrajectoryFrame, past_world: np.ndarray) -> np.ndarray:
        """New blended plan in world coordinates. ``past_world`` is (P, 8)."""
        cf = CanonicalFrame.from_trajectory_frame(current)
        target = make_target(ctrl, current, self.model.future_frames)
        target_local = TargetPoint(vector=cf.traj_to_local(target.vector[None, :])[0])
        past_local = cf.traj_to_local(past_world)
        self._draws += 1
        fresh_local = sample_trajectory(self.model, ctrl.skill, target_local, past_local,
                                        seed=self.seed + self._draws)
        fresh_world = cf.traj_to_world(fresh_local)
        blended = blend_trajectories(self.state, fresh_world)
        self.state = BlendState(previous_plan=blended, frames_consumed=0,
                                blend_horizon=self.state.blend_horizon)
        return blended

    def consume(self, n: int) -> None:
        self.state.frames_consumed = min(self.state.frames_consumed + n,
                                         0 if self.state.previous_plan is None
                                         else len(self.state.previous_plan))

    def needs_replan(self) -> bool:
        return (self.state.previous_plan is None
                or self.state.frames_consumed >= REPLAN_FRAMES)
