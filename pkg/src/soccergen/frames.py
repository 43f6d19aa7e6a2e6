"""Motion-frame representation, human<->ball transforms, and token grids.

A motion frame carries the human state (root position + 24 local joint
rotations), the ball state (relative position, global velocity, control
weight), and binary foot contact labels. The network consumes frames as a
28x6 token grid:

    row 0      root position, zero-padded 3 -> 6
    rows 1-24  joint rotations (6D)
    row 25     relative ball position, zero-padded 3 -> 6
    row 26     ball velocity, zero-padded 3 -> 6
    row 27     ball control weight, zero-padded 1 -> 6

Contact labels travel out-of-band next to the grid (they are predicted by a
separate head, not part of the 28x6 layout).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import BallUntracked, ShapeMismatch
from .rotation import IDENTITY_6D

CONTROL_RADIUS_M = 2.0
# Minimum control weight at which the relative encoding may be inverted.
EPS_CONTROL_WEIGHT = 0.05

NUM_JOINTS = 24
TOKENS_PER_FRAME = 28
TOKEN_DIM = 6
FRAME_DIM = TOKENS_PER_FRAME * TOKEN_DIM  # 168
TRAJ_DIM = 8  # ground position (x, z) + yaw-restricted 6D facing

ROOT_ROW = 0
JOINT_ROWS = slice(1, 25)
BALL_POS_ROW = 25
BALL_VEL_ROW = 26
BALL_W_ROW = 27


class SkillLabel(enum.IntEnum):
    DRIBBLE = 0
    TRICK = 1
    SHOOT = 2
    STAND = 3
    CELEBRATE = 4
    OFF_BALL_MOVE = 5


NUM_SKILLS = len(SkillLabel)


@dataclass(frozen=True)
class HumanState:
    root_pos: np.ndarray   # (3,)
    joint_rot: np.ndarray  # (24, 6)


@dataclass(frozen=True)
class BallState:
    rel_pos: np.ndarray    # (3,) control-weighted offset from the root
    velocity: np.ndarray   # (3,) global, m/s
    control_weight: float


@dataclass(frozen=True)
class ContactLabels:
    ground: np.ndarray  # (4,) in {0,1}, order = skeleton.foot_joints
    ball: np.ndarray    # (4,) in {0,1}


@dataclass(frozen=True)
class MotionFrame:
    human: HumanState
    ball: BallState
    contacts: ContactLabels


@dataclass(frozen=True)
class TrajectoryFrame:
    ground_pos: np.ndarray  # (2,) = (x, z)
    facing: np.ndarray      # (6,) yaw-restricted 6D

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.ground_pos, self.facing])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "TrajectoryFrame":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (TRAJ_DIM,):
            raise ShapeMismatch(f"trajectory frame must be ({TRAJ_DIM},)")
        return cls(ground_pos=v[:2].copy(), facing=v[2:].copy())


def horizontal(v: np.ndarray) -> np.ndarray:
    """Ground-plane components (x, z) of one or more 3-vectors."""
    v = np.asarray(v)
    return v[..., [0, 2]]


def ball_control_weight(ball_pos: np.ndarray, root_pos: np.ndarray) -> float:
    """Linear falloff of ball-tracking confidence with horizontal distance.

    1 at zero horizontal distance, 0 at the control radius (2 m), clamped
    to [0, 1] beyond it.
    """
    d = np.linalg.norm(horizontal(ball_pos) - horizontal(root_pos), axis=-1)
    return float(np.clip(1.0 - d / CONTROL_RADIUS_M, 0.0, 1.0))


def ball_to_relative(ball_pos: np.ndarray, root_pos: np.ndarray) -> tuple[np.ndarray, float]:
    """Control-weighted relative ball position: b' = w_b * (b - h)."""
    ball_pos = np.asarray(ball_pos, dtype=np.float64)
    root_pos = np.asarray(root_pos, dtype=np.float64)
    w = ball_control_weight(ball_pos, root_pos)
    return w * (ball_pos - root_pos), w


def ball_from_relative(rel_pos: np.ndarray, control_weight: float, root_pos: np.ndarray) -> np.ndarray:
    """Invert :func:`ball_to_relative`. Raises BallUntracked for small weights."""
    if control_weight <= EPS_CONTROL_WEIGHT:
        raise BallUntracked(f"control weight {control_weight:.4f} <= {EPS_CONTROL_WEIGHT}")
    return np.asarray(root_pos, dtype=np.float64) + np.asarray(rel_pos, dtype=np.float64) / control_weight


def identity_frame() -> MotionFrame:
    """All-identity rotations, everything else zero except w_b = 0."""
    return MotionFrame(
        human=HumanState(root_pos=np.zeros(3), joint_rot=np.tile(IDENTITY_6D, (NUM_JOINTS, 1))),
        ball=BallState(rel_pos=np.zeros(3), velocity=np.zeros(3), control_weight=0.0),
        contacts=ContactLabels(ground=np.zeros(4), ball=np.zeros(4)),
    )


def frame_to_tokens(frame: MotionFrame) -> np.ndarray:
    """Pack a frame into the 28x6 token grid (zero padding in unused slots)."""
    grid = np.zeros((TOKENS_PER_FRAME, TOKEN_DIM))
    grid[ROOT_ROW, :3] = frame.human.root_pos
    grid[JOINT_ROWS] = frame.human.joint_rot
    grid[BALL_POS_ROW, :3] = frame.ball.rel_pos
    grid[BALL_VEL_ROW, :3] = frame.ball.velocity
    grid[BALL_W_ROW, 0] = frame.ball.control_weight
    return grid


def tokens_to_frame(grid: np.ndarray, contacts: ContactLabels | None = None) -> MotionFrame:
    """Unpack a 28x6 grid; padding slots are ignored."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.shape != (TOKENS_PER_FRAME, TOKEN_DIM):
        raise ShapeMismatch(f"token grid must be ({TOKENS_PER_FRAME},{TOKEN_DIM}), got {grid.shape}")
    if contacts is None:
        contacts = ContactLabels(ground=np.zeros(4), ball=np.zeros(4))
    return MotionFrame(
        human=HumanState(root_pos=grid[ROOT_ROW, :3].copy(), joint_rot=grid[JOINT_ROWS].copy()),
        ball=BallState(
            rel_pos=grid[BALL_POS_ROW, :3].copy(),
            velocity=grid[BALL_VEL_ROW, :3].copy(),
            control_weight=float(grid[BALL_W_ROW, 0]),
        ),
        contacts=contacts,
    )


def padding_mask() -> np.ndarray:
    """Boolean (28, 6) grid, True where a slot carries real data."""
    mask = np.zeros((TOKENS_PER_FRAME, TOKEN_DIM), dtype=bool)
    mask[ROOT_ROW, :3] = True
    mask[JOINT_ROWS] = True
    mask[BALL_POS_ROW, :3] = True
    mask[BALL_VEL_ROW, :3] = True
    mask[BALL_W_ROW, 0] = True
    return mask


# --- array-level helpers for whole windows (F frames at once) ---------------

def frames_to_grid(frames: list[MotionFrame]) -> np.ndarray:
    """Stack frames into (F, 28, 6)."""
    return np.stack([frame_to_tokens(f) for f in frames])


def grid_to_frames(grid: np.ndarray, contacts: np.ndarray | None = None) -> list[MotionFrame]:
    """Unstack (F, 28, 6); ``contacts`` is optional (F, 8) = [c_g(4), c_b(4)]."""
    grid = np.asarray(grid)
    out = []
    for i in range(grid.shape[0]):
        lab = None
        if contacts is not None:
            lab = ContactLabels(ground=contacts[i, :4].copy(), ball=contacts[i, 4:].copy())
        out.append(tokens_to_frame(grid[i], lab))
    return out


def grid_root_pos(grid: np.ndarray) -> np.ndarray:
    """(..., F, 28, 6) -> (..., F, 3) root positions."""
    return np.asarray(grid)[..., ROOT_ROW, :3]


def grid_ball_global(grid: np.ndarray, min_weight: float = EPS_CONTROL_WEIGHT) -> np.ndarray:
    """Global ball positions from a token grid, clamping w_b from below.

    The clamp keeps the inverse transform defined for every frame; callers
    that need the untracked fallback should check w_b themselves.
    """
    grid = np.asarray(grid, dtype=np.float64)
    w = np.maximum(grid[..., BALL_W_ROW, 0], min_weight)
    return grid[..., ROOT_ROW, :3] + grid[..., BALL_POS_ROW, :3] / w[..., None]
