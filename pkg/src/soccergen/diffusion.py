"""T-step DDPM machinery: schedule, forward q-sampling, x0-parameterized
reverse step, and the training losses.

Everything here is a pure function over torch tensors; float64 works for
finite-difference checks, float32 for production. The reverse step predicts
the clean sample directly (x0-parameterization), and betas are rescaled so
the terminal signal level is ~0.01 for any step count, which lets very short
chains (down to T=1) be trained directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from . import frames as fr
from .errors import InvalidStepCount, ShapeMismatch, TooFewFrames
from .nn_transforms import grid_joint_positions
from .skeleton import SkeletonDef

TERMINAL_ALPHA_BAR = 0.01


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-step noise tables, 1-indexed: entry [t-1] belongs to step t."""

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma: np.ndarray  # posterior std; sigma[0] (t=1) is exactly 0

    def alpha_bar_prev(self, t: int) -> float:
        """alpha_bar at t-1 with the convention alpha_bar_0 = 1."""
        return 1.0 if t <= 1 else float(self.alpha_bar[t - 2])


def make_schedule(T: int, kind: str = "linear", beta_min: float = 1e-4, beta_max: float = 0.02) -> DiffusionSchedule:
    """Build a schedule whose terminal alpha_bar is ~TERMINAL_ALPHA_BAR.

    linear: betas interpolate [beta_min, beta_max] and are then rescaled
    (by bisection on a common multiplier) so prod(1-beta) hits the target
    regardless of T. cosine: Nichol & Dhariwal discretization with betas
    capped at 0.999.
    """
    if T < 1:
        raise InvalidStepCount(f"T must be >= 1, got {T}")
    if kind == "linear":
        base = np.linspace(beta_min, beta_max, T)
        lo, hi = 0.0, (1.0 - 1e-9) / base.max()

        def terminal(scale: float) -> float:
            return float(np.prod(1.0 - scale * base))

        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if terminal(mid) > TERMINAL_ALPHA_BAR:
                lo = mid
            else:
                hi = mid
        beta = 0.5 * (lo + hi) * base
    elif kind == "cosine":
        def f(u: float) -> float:
            return math.cos((u + 0.008) / 1.008 * math.pi / 2.0) ** 2

        beta = np.array([min(1.0 - f((i + 1) / T) / f(i / T), 0.999) for i in range(T)])
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")

    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    prev = np.concatenate([[1.0], alpha_bar[:-1]])
    sigma = np.sqrt(beta * (1.0 - prev) / (1.0 - alpha_bar))
    return DiffusionSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar, sigma=sigma)


def q_sample(x0: torch.Tensor, t: int | torch.Tensor, eps: torch.Tensor, sched: DiffusionSchedule) -> torch.Tensor:
    """Forward marginal: sqrt(a_bar_t) x0 + sqrt(1 - a_bar_t) eps.

    ``t`` may be a scalar or a per-sample batch of step indices in [1, T].
    """
    if x0.shape != eps.shape:
        raise ShapeMismatch(f"x0 {tuple(x0.shape)} vs eps {tuple(eps.shape)}")
    ab = torch.as_tensor(sched.alpha_bar, dtype=x0.dtype, device=x0.device)
    t_idx = torch.as_tensor(t, device=x0.device).long() - 1
    a = ab[t_idx]
    while a.dim() < x0.dim():
        a = a.unsqueeze(-1)
    return a.sqrt() * x0 + (1.0 - a).sqrt() * eps


def posterior_mean(x_t: torch.Tensor, x0_hat: torch.Tensor, t: int, sched: DiffusionSchedule) -> torch.Tensor:
    """DDPM posterior mean with x0-parameterization."""
    ab_t = float(sched.alpha_bar[t - 1])
    ab_prev = sched.alpha_bar_prev(t)
    beta_t = float(sched.beta[t - 1])
    alpha_t = float(sched.alpha[t - 1])
    c0 = math.sqrt(ab_prev) * beta_t / (1.0 - ab_t)
    ct = math.sqrt(alpha_t) * (1.0 - ab_prev) / (1.0 - ab_t)
    return c0 * x0_hat + ct * x_t


def reverse_step(
    x_t: torch.Tensor, x0_hat: torch.Tensor, t: int, sched: DiffusionSchedule, noise: torch.Tensor | None = None
) -> torch.Tensor:
    """One unguided reverse step; deterministic (mean only) at t=1."""
    if x_t.shape != x0_hat.shape:
        raise ShapeMismatch(f"x_t {tuple(x_t.shape)} vs x0_hat {tuple(x0_hat.shape)}")
    mu = posterior_mean(x_t, x0_hat, t, sched)
    if t <= 1:
        return mu
    if noise is None:
        raise ValueError("noise required for t > 1")
    if noise.shape != x_t.shape:
        raise ShapeMismatch(f"noise {tuple(noise.shape)} vs x_t {tuple(x_t.shape)}")
    return mu + float(sched.sigma[t - 1]) * noise


# ---------------------------------------------------------------------------
# Training losses. All are means (not sums) over their stated reduction so
# unit weights are comparable across terms.
# ---------------------------------------------------------------------------

def loss_simple(x0: torch.Tensor, x0_hat: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
    """MSE over entries; optional mask (broadcastable, 1 = counted) excludes
    padding slots so dead dimensions do not contribute."""
    if x0.shape != x0_hat.shape:
        raise ShapeMismatch(f"x0 {tuple(x0.shape)} vs x0_hat {tuple(x0_hat.shape)}")
    d2 = (x0 - x0_hat) ** 2
    if mask is None:
        return d2.mean()
    mask = mask.to(d2.dtype)
    weight = mask.expand_as(d2)
    return (d2 * weight).sum() / weight.sum()


def loss_pos_from_positions(ref_pos: torch.Tensor, pred_pos: torch.Tensor) -> torch.Tensor:
    return ((ref_pos - pred_pos) ** 2).sum(dim=(-1, -2)).mean()


def loss_pos(x0: torch.Tensor, x0_hat: torch.Tensor, skeleton: SkeletonDef,
             ref_positions: torch.Tensor | None = None) -> torch.Tensor:
    """Mean over frames of the squared joint-position error (summed over
    joints and coordinates). Grids are (..., F, 28, 6). ``ref_positions``
    lets callers reuse a precomputed FK of the constant target."""
    p = grid_joint_positions(skeleton, x0) if ref_positions is None else ref_positions
    p_hat = grid_joint_positions(skeleton, x0_hat)
    return loss_pos_from_positions(p, p_hat)


def loss_vel(x0: torch.Tensor, x0_hat: torch.Tensor, frame_dim: int = -3) -> torch.Tensor:
    """Mean squared difference of first-order frame differences.

    ``frame_dim`` locates the frame axis (-3 for (..., F, 28, 6) grids,
    -2 for (..., F, D) trajectories).
    """
    if x0.shape[frame_dim] < 2:
        raise TooFewFrames("velocity loss needs F >= 2")
    v = x0.diff(dim=frame_dim)
    v_hat = x0_hat.diff(dim=frame_dim)
    return ((v - v_hat) ** 2).mean()


def loss_foot_from_positions(feet: torch.Tensor, contact_ground: torch.Tensor) -> torch.Tensor:
    disp = feet.diff(dim=-3)
    gate = contact_ground[..., :-1, :, None].to(feet.dtype)
    return ((disp * gate) ** 2).sum(dim=(-1, -2)).mean()


def loss_foot(x0_hat: torch.Tensor, contact_ground: torch.Tensor, skeleton: SkeletonDef,
              pred_positions: torch.Tensor | None = None) -> torch.Tensor:
    """Penalize movement of grounded feet in the prediction.

    ``x0_hat``: (..., F, 28, 6); ``contact_ground``: (..., F, |foot_joints|)
    binary mask. Mean over the F-1 frame pairs of the masked squared foot
    displacement (summed over foot joints and coordinates); the mask of the
    earlier frame gates each pair.
    """
    if x0_hat.shape[-3] < 2:
        raise TooFewFrames("foot loss needs F >= 2")
    if contact_ground.shape[-1] != len(skeleton.foot_joints) or contact_ground.shape[-2] != x0_hat.shape[-3]:
        raise ShapeMismatch("contact mask must be (..., F, |foot_joints|)")
    pos = grid_joint_positions(skeleton, x0_hat) if pred_positions is None else pred_positions
    return loss_foot_from_positions(pos[..., list(skeleton.foot_joints), :], contact_ground)


def loss_total(terms: dict[str, torch.Tensor], weights: dict[str, float] | None = None) -> torch.Tensor:
    """Weighted sum; unit weights by default (the calibrated setting for
    both the motion and trajectory objectives)."""
    total = None
    for name, value in terms.items():
        w = 1.0 if weights is None else weights.get(name, 1.0)
        term = w * value
        total = term if total is None else total + term
    if total is None:
        raise ValueError("no loss terms given")
    return total


def motion_padding_mask(dtype=torch.float32) -> torch.Tensor:
    """(28, 6) mask of live slots for loss_simple on motion grids."""
    return torch.as_tensor(fr.padding_mask()).to(dtype)
