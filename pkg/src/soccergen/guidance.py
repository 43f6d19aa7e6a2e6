"""Contact-guided sampling: kick detection from ball acceleration, foot
selection with lifted-foot priority, the contact loss, and the spherical
guided reverse step.

The guidance gradient is taken with respect to the predicted clean sample
(treating the denoiser Jacobian as identity, the usual reconstruction-
guidance shortcut) and the indicator functions / argmin selection / control-
weight clamp as locally constant, i.e. the piecewise-smooth subgradient.
``contact_loss_grad`` isolates this choice so a full-Jacobian variant can be
swapped in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from . import frames as fr
from .diffusion import DiffusionSchedule, posterior_mean, reverse_step
from .errors import TooFewFrames
from .nn_transforms import grid_ball_global_t, grid_joint_positions
from .skeleton import SkeletonDef


@dataclass(frozen=True)
class GuidanceParams:
    accel_threshold: float = 2.0   # m/s^2, kick detector
    dist_threshold: float = 0.1    # m, contact distance
    lifted_penalty: float = 2.0    # scales grounded-foot distances
    delta: float = 1e-6            # keeps the loss quotient finite
    guidance_rate: float = 0.5     # blend between noise and gradient steps

    def __post_init__(self):
        if min(self.accel_threshold, self.dist_threshold, self.lifted_penalty, self.delta) <= 0:
            raise ValueError("guidance parameters must be positive")
        if not 0.0 <= self.guidance_rate <= 1.0:
            raise ValueError("guidance_rate must be in [0, 1]")


def ball_acceleration(positions: torch.Tensor | np.ndarray, fps: float = 30.0) -> torch.Tensor:
    """Second differences of global ball positions, (F, 3) -> (F, 3).

    Interior frames use the central stencil; the two endpoints reuse the
    nearest interior stencil (one-sided).
    """
    p = torch.as_tensor(positions)
    if p.shape[-2] < 3:
        raise TooFewFrames("acceleration needs at least 3 frames")
    core = (p[..., 2:, :] - 2.0 * p[..., 1:-1, :] + p[..., :-2, :]) * (fps * fps)
    return torch.cat([core[..., :1, :], core, core[..., -1:, :]], dim=-2)


def detect_contact(accel: torch.Tensor, params: GuidanceParams) -> torch.Tensor:
    """Per-frame kick indicator: strict ||b_a|| > tau_a."""
    mag = torch.as_tensor(accel).norm(dim=-1)
    return (mag > params.accel_threshold).to(mag.dtype)


def foot_ball_distance(
    foot_pos: torch.Tensor,
    ball_pos: torch.Tensor,
    contact_ground: torch.Tensor,
    params: GuidanceParams,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Effective distance and selected joint with lifted-foot priority.

    foot_pos (..., J, 3), ball_pos (..., 3), contact_ground (..., J).
    Grounded joints have their euclidean distance scaled by the penalty, so
    a lifted foot wins unless it is ``lifted_penalty`` times farther away.
    Ties break toward the lowest joint index (argmin convention).
    """
    dist = (foot_pos - torch.as_tensor(ball_pos).unsqueeze(-2)).norm(dim=-1)
    factor = 1.0 + (params.lifted_penalty - 1.0) * torch.as_tensor(contact_ground).to(dist.dtype)
    eff = dist * factor
    idx = eff.argmin(dim=-1)
    return eff.gather(-1, idx.unsqueeze(-1)).squeeze(-1), idx


def contact_loss(
    grid: torch.Tensor,
    contact_ground: torch.Tensor,
    skeleton: SkeletonDef,
    params: GuidanceParams,
    fps: float = 30.0,
) -> torch.Tensor:
    """Contact loss over a predicted window.

    grid (..., F, 28, 6) in a consistent coordinate frame; contact_ground
    (..., F, |foot_joints|). Sums (not averages, following the calibrated
    form) d_i * I(d_i > tau_d) * c_hat_i / (I(d_i > tau_d) + delta) over
    frames. Differentiable w.r.t. the grid wherever indicators and the
    argmin are locally constant.
    """
    if grid.shape[-3] < 3:
        raise TooFewFrames("contact loss needs at least 3 frames for acceleration")
    ball = grid_ball_global_t(grid)
    accel = ball_acceleration(ball, fps)
    c_hat = detect_contact(accel.detach(), params)
    feet = grid_joint_positions(skeleton, grid)[..., list(skeleton.foot_joints), :]
    d, _ = foot_ball_distance(feet, ball, contact_ground, params)
    gate = (d > params.dist_threshold).detach().to(d.dtype)
    per_frame = d * gate * c_hat / (gate + params.delta)
    return per_frame.sum(dim=-1)


def contact_loss_grad(
    grid: torch.Tensor,
    contact_ground: torch.Tensor,
    skeleton: SkeletonDef,
    params: GuidanceParams,
    fps: float = 30.0,
) -> tuple[torch.Tensor, torch.Tensor]:
    """(loss value, dL/dgrid) via autograd through FK and the ball decode."""
    with torch.enable_grad():
        x = grid.detach().clone().requires_grad_(True)
        loss = contact_loss(x, contact_ground, skeleton, params, fps)
        total = loss.sum()
        if total.requires_grad:
            (g,) = torch.autograd.grad(total, x)
        else:  # loss is identically zero: no contact frames
            g = torch.zeros_like(x)
    return loss.detach(), g.detach()


def guided_step(
    x_t: torch.Tensor,
    x0_hat: torch.Tensor,
    t: int,
    sched: DiffusionSchedule,
    grad: torch.Tensor,
    noise: torch.Tensor,
    params: GuidanceParams,
) -> torch.Tensor:
    """Spherical guidance: blend the normalized loss-gradient direction with
    the unconditional noise direction and land on the sphere of radius
    sqrt(n) * sigma_t around the posterior mean.

    Falls back to the plain reverse step when the gradient vanishes or at
    t=1 where sigma is zero.
    """
    sigma = float(sched.sigma[t - 1])
    mu = posterior_mean(x_t, x0_hat, t, sched)
    if sigma == 0.0:
        return mu
    gnorm = grad.norm()
    if float(gnorm) == 0.0:
        return reverse_step(x_t, x0_hat, t, sched, noise)
    n = x_t.numel()
    d_star = -math.sqrt(n) * sigma * grad / gnorm
    d_t = sigma * noise
    d = d_t + params.guidance_rate * (d_star - d_t)
    return mu + math.sqrt(n) * sigma * d / d.norm()


def guided_step_batch(
    x_t: torch.Tensor,
    x0_hat: torch.Tensor,
    t: int,
    sched: DiffusionSchedule,
    grad: torch.Tensor,
    noise: torch.Tensor,
    params: GuidanceParams,
) -> torch.Tensor:
    """Vectorized :func:`guided_step` over a leading batch dimension; norms
    and the sphere radius are per sample."""
    B = x_t.shape[0]
    sigma = float(sched.sigma[t - 1])
    mu = posterior_mean(x_t, x0_hat, t, sched)
    if sigma == 0.0:
        return mu
    n = x_t[0].numel()
    flat_g = grad.reshape(B, -1)
    gnorm = flat_g.norm(dim=1, keepdim=True)
    d_star = -math.sqrt(n) * sigma * flat_g / gnorm.clamp_min(1e-30)
    d_t = sigma * noise.reshape(B, -1)
    d = d_t + params.guidance_rate * (d_star - d_t)
    step = math.sqrt(n) * sigma * d / d.norm(dim=1, keepdim=True)
    # zero-gradient rows fall back to the plain stochastic step
    plain = d_t
    step = torch.where(gnorm > 0, step, plain)
    return mu + step.reshape(x_t.shape)
