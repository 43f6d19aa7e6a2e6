"""Stage 2: windowed autoregressive sampling from the motion diffusion model.

The reverse chain runs t = T..1 in canonical token space; steps selected by
the guidance schedule take the spherical guided step using the contact-loss
gradient (with the contact-ground mask thresholded from the model's own
contact head), the rest take the plain posterior step. The final step is the
deterministic posterior mean.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from . import frames as fr
from .ball_physics import BallPhysParams, BallRigidState, step as phys_step
from .diffusion import DiffusionSchedule, reverse_step
from .errors import NonFiniteSample, WindowUnderflow
from .guidance import GuidanceParams, contact_loss_grad, guided_step_batch
from .networks import MotionDenoiser
from .skeleton import SkeletonDef


class GuidanceSchedule(enum.Enum):
    NONE = "none"
    START1 = "start1"
    END1 = "end1"
    START2 = "start2"
    END2 = "end2"
    START1_END1 = "start1end1"

    def selected_steps(self, T: int) -> set[int]:
        """Reverse-process steps (t values) that receive guidance."""
        if self is GuidanceSchedule.NONE:
            return set()
        if self is GuidanceSchedule.START1:
            return {T}
        if self is GuidanceSchedule.START2:
            return {T, T - 1} if T > 1 else {T}
        if self is GuidanceSchedule.END1:
            return {1}
        if self is GuidanceSchedule.END2:
            return {1, 2} if T > 1 else {1}
        return {T, 1}


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 8
    schedule: GuidanceSchedule = GuidanceSchedule.END2
    guidance: GuidanceParams = field(default_factory=GuidanceParams)
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


def sample_motion(
    model: MotionDenoiser,
    sched: DiffusionSchedule,
    skill: torch.Tensor | float,
    past: torch.Tensor,
    traj: torch.Tensor,
    cfg: SamplerConfig,
    skeleton: SkeletonDef,
    on_step=None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Sample motion windows in canonical token space.

    ``past`` (B,P,28,6), ``traj`` (B,F,8) -> (grids (B,F,28,6), contact
    logits (B,F,8)). Deterministic per cfg.seed. ``on_step(t, guided)`` is
    called once per reverse step (used by tests and the sweep harness).

    A non-finite chain is resampled once with a shifted seed, then raised.
    """
    try:
        return _sample_once(model, sched, skill, past, traj, cfg, skeleton, on_step)
    except NonFiniteSample:
        retry = replace(cfg, seed=cfg.seed + 0x5EED)
        return _sample_once(model, sched, skill, past, traj, retry, skeleton, on_step)


def _sample_once(model, sched, skill, past, traj, cfg, skeleton, on_step):
    assert sched.T == cfg.steps, "schedule and sampler step counts must agree"
    dtype = next(model.parameters()).dtype
    # chain math runs in at least f32 no matter the model precision
    chain_dtype = torch.promote_types(dtype, torch.float32)
    gen = torch.Generator().manual_seed(cfg.seed)
    B = past.shape[0]
    shape = (B, model.future_frames, fr.TOKENS_PER_FRAME, fr.TOKEN_DIM)
    skill_t = torch.as_tensor(skill).reshape(-1).to(dtype)
    if skill_t.numel() == 1 and B > 1:
        skill_t = skill_t.expand(B)
    past = past.to(dtype)
    traj = traj.to(dtype)
    x = torch.randn(shape, generator=gen).to(dtype)
    selected = cfg.schedule.selected_steps(cfg.steps)
    contact_logits = None
    with torch.no_grad():
        for t in range(cfg.steps, 0, -1):
            pred, contact_logits = model(x, t, skill_t, past, traj)
            pred = pred.to(chain_dtype)
            contact_logits = contact_logits.to(chain_dtype)
            if not bool(torch.isfinite(pred).all()):
                raise NonFiniteSample(f"non-finite prediction at t={t}")
            guided = t in selected
            noise = torch.randn(shape, generator=gen).to(chain_dtype) if t > 1 else torch.zeros(shape, dtype=chain_dtype)
            if guided:
                c_g = (contact_logits[..., :4] > 0.0).to(chain_dtype)  # sigmoid > 0.5
                _, grad = contact_loss_grad(pred, c_g, skeleton, cfg.guidance)
                x = guided_step_batch(x.to(chain_dtype), pred, t, sched, grad, noise, cfg.guidance)
            else:
                x = reverse_step(x.to(chain_dtype), pred, t, sched, noise if t > 1 else None)
            x = x.to(dtype)
            if on_step is not None:
                on_step(t, guided)
    if not bool(torch.isfinite(x).all()):
        raise NonFiniteSample("non-finite final sample")
    return x.to(chain_dtype), contact_logits


@dataclass
class MotionWindow:
    """Autoregressive window bookkeeping (world-space frames)."""

    past: list[fr.MotionFrame]
    future: list[fr.MotionFrame]
    consumed: int = 0

    def __post_init__(self):
        if self.consumed > len(self.future):
            raise WindowUnderflow("consumed beyond window")


def advance_window(window: MotionWindow, executed: int, fresh: list[fr.MotionFrame]) -> MotionWindow:
    """Shift the executed prefix of the old future into the past and install
    the fresh future."""
    if executed > len(window.future):
        raise WindowUnderflow(f"executed {executed} > future {len(window.future)}")
    P = len(window.past)
    merged = list(window.past) + list(window.future[:executed])
    return MotionWindow(past=merged[-P:], future=list(fresh), consumed=0)


class BallTracker:
    """Holds the last tracked global ball state for the physics fallback."""

    def __init__(self, params: BallPhysParams | None = None, fps: int = 30):
        self.params = params or BallPhysParams()
        self.fps = fps
        self.state: BallRigidState | None = None
        sub = max(1, int(round(1.0 / (fps * self.params.dt))))
        self._fine = replace(self.params, dt=1.0 / (fps * sub))
        self._sub = sub

    def observe(self, position: np.ndarray, velocity: np.ndarray) -> None:
        self.state = BallRigidState(position=np.asarray(position, dtype=np.float64),
                                    velocity=np.asarray(velocity, dtype=np.float64))

    def extrapolate(self) -> np.ndarray:
        """Advance one output frame of free rolling and return the position."""
        if self.state is None:
            raise NonFiniteSample("no tracked ball state to extrapolate from")
        s = self.state
        for _ in range(self._sub):
            s = phys_step(s, self._fine)
        self.state = s
        return s.position.copy()


def decode_output(
    grid: torch.Tensor | np.ndarray,
    contact_logits: torch.Tensor | np.ndarray,
    tracker: BallTracker | None = None,
) -> tuple[list[fr.MotionFrame], np.ndarray]:
    """Token grids (F,28,6) + logits (F,8) -> frames and global ball
    positions (in the grid's coordinate frame).

    Tracked frames (w_b above the inversion threshold) invert the relative
    encoding and refresh the tracker; untracked frames roll the ball
    forward with the physics fallback.
    """
    g = np.asarray(torch.as_tensor(grid).detach().cpu().to(torch.float64))
    logits = np.asarray(torch.as_tensor(contact_logits).detach().cpu().to(torch.float64))
    contacts = (logits > 0.0).astype(float)
    tracker = tracker or BallTracker()
    frames = []
    ball_out = np.zeros((g.shape[0], 3))
    for i in range(g.shape[0]):
        frame = fr.tokens_to_frame(
            g[i], fr.ContactLabels(ground=contacts[i, :4], ball=contacts[i, 4:]))
        w = frame.ball.control_weight
        if w > fr.EPS_CONTROL_WEIGHT:
            ball = fr.ball_from_relative(frame.ball.rel_pos, w, frame.human.root_pos)
            tracker.observe(ball, frame.ball.velocity)
        elif tracker.state is not None:
            ball = tracker.extrapolate()
        else:
            # never tracked: fall back to the root-relative decode with the
            # clamped weight (degenerate but defined)
            ball = fr.grid_ball_global(g[i][None])[0]
            tracker.observe(ball, frame.ball.velocity)
        ball_out[i] = ball
        frames.append(frame)
    return frames, ball_out
