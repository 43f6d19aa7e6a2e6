"""Window extraction from clips for training and evaluation.

Every window is canonicalized to the local frame of its newest past frame
(ground position at the origin, yaw zero); see :mod:`canonical`.
"""

from __future__ import annotations

import numpy as np
import torch

from . import frames as fr
from .canonical import CanonicalFrame
from .clipio import MotionClip
from .rotation import yaw_from_rot6d, yaw_to_rot6d


def clip_grid(clip: MotionClip) -> np.ndarray:
    """(N, 28, 6) world-space token grid of a clip."""
    return fr.frames_to_grid(clip.frames)


def clip_trajectory(clip: MotionClip) -> np.ndarray:
    """(N, 8) world-space trajectory rows (ground position + yaw facing)."""
    n = len(clip.frames)
    rows = np.zeros((n, fr.TRAJ_DIM))
    for i, f in enumerate(clip.frames):
        rows[i, 0] = f.human.root_pos[0]
        rows[i, 1] = f.human.root_pos[2]
        rows[i, 2:] = yaw_to_rot6d(yaw_from_rot6d(f.human.joint_rot[0]))
    return rows


def clip_contacts(clip: MotionClip) -> np.ndarray:
    """(N, 8) = [c_g(4), c_b(4)]."""
    return np.stack([np.concatenate([f.contacts.ground, f.contacts.ball]) for f in clip.frames])


def window_starts(n_frames: int, past: int, future: int, stride: int) -> list[int]:
    last = n_frames - (past + future)
    if last < 0:
        return []
    return list(range(0, last + 1, stride))


def extract_motion_windows(
    clips: list[MotionClip], past: int = 10, future: int = 45, stride: int = 15,
    dtype=torch.float32,
) -> dict[str, torch.Tensor]:
    """Canonicalized motion windows for training the motion model.

    Returns tensors: x0 (N,F,28,6), past (N,P,28,6), traj (N,F,8),
    skill (N,), contacts (N,F,8).
    """
    xs, ps, ts, ss, cs = [], [], [], [], []
    for clip in clips:
        grid = clip_grid(clip)
        traj = clip_trajectory(clip)
        contacts = clip_contacts(clip)
        for s in window_starts(len(clip.frames), past, future, stride):
            ref_idx = s + past - 1
            cf = CanonicalFrame.from_root(grid[ref_idx, 0, :3], grid[ref_idx, 1, :])
            xs.append(cf.grid_to_local(grid[s + past: s + past + future]))
            ps.append(cf.grid_to_local(grid[s: s + past]))
            ts.append(cf.traj_to_local(traj[s + past: s + past + future]))
            ss.append(float(clip.skill))
            cs.append(contacts[s + past: s + past + future])
    return {
        "x0": torch.as_tensor(np.stack(xs), dtype=dtype),
        "past": torch.as_tensor(np.stack(ps), dtype=dtype),
        "traj": torch.as_tensor(np.stack(ts), dtype=dtype),
        "skill": torch.as_tensor(np.asarray(ss), dtype=dtype),
        "contacts": torch.as_tensor(np.stack(cs), dtype=dtype),
    }


def extract_trajectory_windows(
    clips: list[MotionClip], past: int = 10, future: int = 45, stride: int = 15,
    dtype=torch.float32,
) -> dict[str, torch.Tensor]:
    """Canonicalized trajectory windows: z0 (N,F,8), past (N,P,8),
    target (N,8) = last future row, skill (N,)."""
    zs, ps, gs, ss = [], [], [], []
    for clip in clips:
        traj = clip_trajectory(clip)
        for s in window_starts(len(clip.frames), past, future, stride):
            ref_idx = s + past - 1
            cf = CanonicalFrame(ground_pos=traj[ref_idx, :2].copy(),
                                yaw=float(yaw_from_rot6d(traj[ref_idx, 2:])))
            fut = cf.traj_to_local(traj[s + past: s + past + future])
            zs.append(fut)
            ps.append(cf.traj_to_local(traj[s: s + past]))
            gs.append(fut[-1])
            ss.append(float(clip.skill))
    return {
        "z0": torch.as_tensor(np.stack(zs), dtype=dtype),
        "past": torch.as_tensor(np.stack(ps), dtype=dtype),
        "target": torch.as_tensor(np.stack(gs), dtype=dtype),
        "skill": torch.as_tensor(np.asarray(ss), dtype=dtype),
    }


def index_batches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i: i + batch_size] for i in range(0, n, batch_size)]
