"""Differentiable (torch) counterparts of the geometry ops.

The numpy implementations in :mod:`rotation` / :mod:`skeleton` are the
reference; these mirror them for use inside training losses and guidance,
and are cross-checked against the numpy versions in the test suite.
"""

from __future__ import annotations

import torch

from . import frames as fr
from .errors import DegenerateRotation
from .skeleton import SkeletonDef


def rot6d_to_matrix_t(r6: torch.Tensor, check: bool = False) -> torch.Tensor:
    """(..., 6) -> (..., 3, 3) via Gram-Schmidt; differentiable."""
    a, b = r6[..., :3], r6[..., 3:]
    na = a.norm(dim=-1, keepdim=True)
    if check and bool((na <= 1e-8).any()):
        raise DegenerateRotation("first 6D column has (near-)zero norm")
    x = a / na.clamp_min(1e-12)
    y = b - (x * b).sum(-1, keepdim=True) * x
    ny = y.norm(dim=-1, keepdim=True)
    if check and bool((ny <= 1e-8 * b.norm(dim=-1, keepdim=True).clamp_min(1.0)).any()):
        raise DegenerateRotation("6D columns are (near-)parallel")
    y = y / ny.clamp_min(1e-12)
    z = torch.cross(x, y, dim=-1)
    return torch.stack([x, y, z], dim=-1)


def forward_kinematics_t(
    skeleton: SkeletonDef, root_pos: torch.Tensor, joint_rot6d: torch.Tensor
) -> torch.Tensor:
    """Batched differentiable FK: (..., 3) + (..., J, 6) -> (..., J, 3)."""
    J = skeleton.joint_count
    local = rot6d_to_matrix_t(joint_rot6d)
    offs = torch.as_tensor(skeleton.offset, dtype=root_pos.dtype, device=root_pos.device)
    glob = [local[..., 0, :, :]]
    pos = [root_pos]
    for j in range(1, J):
        p = int(skeleton.parent[j])
        gp = glob[p]
        pos.append(pos[p] + (gp @ offs[j]))
        glob.append(gp @ local[..., j, :, :])
    return torch.stack(pos, dim=-2)


def grid_joint_positions(skeleton: SkeletonDef, grid: torch.Tensor) -> torch.Tensor:
    """FK over token grids: (..., 28, 6) -> (..., 24, 3)."""
    return forward_kinematics_t(skeleton, grid[..., fr.ROOT_ROW, :3], grid[..., 1:25, :])


def grid_ball_global_t(grid: torch.Tensor, min_weight: float = fr.EPS_CONTROL_WEIGHT) -> torch.Tensor:
    """Differentiable global ball position with the control weight clamped
    from below so the inverse stays defined on noisy grids."""
    w = grid[..., fr.BALL_W_ROW, 0].clamp_min(min_weight)
    return grid[..., fr.ROOT_ROW, :3] + grid[..., fr.BALL_POS_ROW, :3] / w.unsqueeze(-1)


def padding_mask_t(dtype=torch.float32, device=None) -> torch.Tensor:
    return torch.as_tensor(fr.padding_mask(), device=device).to(dtype)
