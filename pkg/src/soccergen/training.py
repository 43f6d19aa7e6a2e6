"""AdamW training loops for the trajectory and motion models.

Optimization is plain decoupled-weight-decay Adam on full gradients from
autograd; a bf16 autocast fast path is available for the transformer forward
(losses are always reduced in float32). Settings mirror the calibrated
defaults: trajectory lr 1e-4 / weight decay 0.01, motion lr 5e-4 / weight
decay 0, batch size 512.
"""

from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from . import diffusion as dif
from .datasets import index_batches
from .errors import NonFiniteLoss
from .nn_transforms import grid_joint_positions
from .networks import MotionDenoiser, SkillClassifier, TrajectoryDenoiser
from .skeleton import SkeletonDef

log = logging.getLogger(__name__)

CONTACT_LOSS_WEIGHT = 0.1


@dataclass
class TrainConfig:
    lr: float = 5e-4
    weight_decay: float = 0.0
    batch_size: int = 512
    epochs: int = 1000
    autocast_bf16: bool = False
    seed: int = 0
    stratify_t: bool = False  # stratified diffusion steps within a batch
    grad_clip: float | None = None


def trajectory_train_config() -> TrainConfig:
    return TrainConfig(lr=1e-4, weight_decay=0.01, epochs=4000)


def motion_train_config() -> TrainConfig:
    return TrainConfig(lr=5e-4, weight_decay=0.0, epochs=1000)


def make_optimizer(model: torch.nn.Module, cfg: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)


def _autocast(enabled: bool):
    if enabled:
        return torch.autocast("cpu", dtype=torch.bfloat16)
    return contextlib.nullcontext()


def motion_losses(
    model: MotionDenoiser,
    batch: dict[str, torch.Tensor],
    t: torch.Tensor,
    eps: torch.Tensor,
    sched: dif.DiffusionSchedule,
    skeleton: SkeletonDef,
    autocast_bf16: bool = False,
) -> dict[str, torch.Tensor]:
    """All motion training loss terms for given (t, eps)."""
    x0 = batch["x0"]
    x_t = dif.q_sample(x0, t, eps, sched)
    with _autocast(autocast_bf16):
        pred, contact_logits = model(x_t, t, batch["skill"], batch["past"], batch["traj"])
    # reduce losses at (at least) the data precision even under autocast
    pred = pred.to(x0.dtype)
    contact_logits = contact_logits.to(x0.dtype)
    mask = dif.motion_padding_mask(x0.dtype)
    pred_pos = grid_joint_positions(skeleton, pred)
    ref_pos = batch.get("ref_pos")
    if ref_pos is None:
        ref_pos = grid_joint_positions(skeleton, x0)
    terms = {
        "simple": dif.loss_simple(x0, pred, mask),
        "pos": dif.loss_pos_from_positions(ref_pos, pred_pos),
        "vel": dif.loss_vel(x0, pred),
        "foot": dif.loss_foot_from_positions(
            pred_pos[..., list(skeleton.foot_joints), :], batch["contacts"][..., :4]),
        "contact": CONTACT_LOSS_WEIGHT
        * F.binary_cross_entropy_with_logits(contact_logits, batch["contacts"]),
    }
    return terms


def train_step_motion(
    model: MotionDenoiser,
    optimizer: torch.optim.Optimizer,
    batch: dict[str, torch.Tensor],
    sched: dif.DiffusionSchedule,
    skeleton: SkeletonDef,
    generator: torch.Generator,
    autocast_bf16: bool = False,
    stratify_t: bool = False,
    grad_clip: float | None = None,
) -> dict[str, float]:
    """One AdamW step on a batch; returns per-term losses. Aborts (raises
    NonFiniteLoss, parameters untouched) if any term is non-finite.

    ``stratify_t`` draws the per-sample steps as a shuffled balanced
    covering of [1, T] (uniform marginally, lower gradient variance)."""
    B = batch["x0"].shape[0]
    if stratify_t:
        base = torch.arange(B) % sched.T + 1
        t = base[torch.randperm(B, generator=generator)]
    else:
        t = torch.randint(1, sched.T + 1, (B,), generator=generator)
    eps = torch.randn(batch["x0"].shape, generator=generator, dtype=batch["x0"].dtype)
    terms = motion_losses(model, batch, t, eps, sched, skeleton, autocast_bf16)
    total = dif.loss_total(terms)
    if not torch.isfinite(total):
        raise NonFiniteLoss({k: float(v.detach()) for k, v in terms.items()})
    optimizer.zero_grad(set_to_none=True)
    total.backward()
    if grad_clip is not None:
        torch.nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    optimizer.step()
    out = {k: float(v.detach()) for k, v in terms.items()}
    out["total"] = float(total.detach())
    return out


def trajectory_losses(
    model: TrajectoryDenoiser,
    batch: dict[str, torch.Tensor],
    eps: torch.Tensor,
    sched: dif.DiffusionSchedule,
    autocast_bf16: bool = False,
) -> dict[str, torch.Tensor]:
    z0 = batch["z0"]
    z_t = dif.q_sample(z0, 1, eps, sched)
    with _autocast(autocast_bf16):
        pred = model(z_t, batch["skill"], batch["target"], batch["past"])
    pred = pred.to(z0.dtype)
    return {
        "recon": dif.loss_simple(z0, pred),
        "vel": dif.loss_vel(z0, pred, frame_dim=-2),
    }


def train_step_trajectory(
    model: TrajectoryDenoiser,
    optimizer: torch.optim.Optimizer,
    batch: dict[str, torch.Tensor],
    sched: dif.DiffusionSchedule,
    generator: torch.Generator,
    autocast_bf16: bool = False,
) -> dict[str, float]:
    eps = torch.randn(batch["z0"].shape, generator=generator, dtype=batch["z0"].dtype)
    terms = trajectory_losses(model, batch, eps, sched, autocast_bf16)
    total = dif.loss_total(terms)
    if not torch.isfinite(total):
        raise NonFiniteLoss({k: float(v.detach()) for k, v in terms.items()})
    optimizer.zero_grad(set_to_none=True)
    total.backward()
    optimizer.step()
    out = {k: float(v.detach()) for k, v in terms.items()}
    out["total"] = float(total.detach())
    return out


def _sub(batch: dict[str, torch.Tensor], idx: np.ndarray) -> dict[str, torch.Tensor]:
    ix = torch.as_tensor(idx, dtype=torch.long)
    return {k: v[ix] for k, v in batch.items()}


def fit_motion(
    model: MotionDenoiser,
    data: dict[str, torch.Tensor],
    sched: dif.DiffusionSchedule,
    skeleton: SkeletonDef,
    cfg: TrainConfig,
    epoch_callback=None,
    optimizer: torch.optim.Optimizer | None = None,
) -> list[dict[str, float]]:
    """Epoch loop; returns per-epoch mean losses. ``epoch_callback(epoch,
    losses)`` may return True to stop early."""
    optimizer = optimizer or make_optimizer(model, cfg)
    gen = torch.Generator().manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    history = []
    model.train()
    for epoch in range(1, cfg.epochs + 1):
        sums: dict[str, float] = {}
        batches = index_batches(data["x0"].shape[0], cfg.batch_size, rng)
        for idx in batches:
            losses = train_step_motion(model, optimizer, _sub(data, idx), sched, skeleton,
                                       gen, cfg.autocast_bf16, cfg.stratify_t, cfg.grad_clip)
            for k, v in losses.items():
                sums[k] = sums.get(k, 0.0) + v
        mean = {k: v / len(batches) for k, v in sums.items()}
        history.append(mean)
        if epoch_callback is not None and epoch_callback(epoch, mean):
            break
    model.eval()
    return history


def fit_trajectory(
    model: TrajectoryDenoiser,
    data: dict[str, torch.Tensor],
    sched: dif.DiffusionSchedule,
    cfg: TrainConfig,
    epoch_callback=None,
) -> list[dict[str, float]]:
    optimizer = make_optimizer(model, cfg)
    gen = torch.Generator().manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    history = []
    model.train()
    for epoch in range(1, cfg.epochs + 1):
        sums: dict[str, float] = {}
        batches = index_batches(data["z0"].shape[0], cfg.batch_size, rng)
        for idx in batches:
            losses = train_step_trajectory(model, optimizer, _sub(data, idx), sched, gen,
                                           cfg.autocast_bf16)
            for k, v in losses.items():
                sums[k] = sums.get(k, 0.0) + v
        mean = {k: v / len(batches) for k, v in sums.items()}
        history.append(mean)
        if epoch_callback is not None and epoch_callback(epoch, mean):
            break
    model.eval()
    return history


def fit_classifier(
    model: SkillClassifier,
    windows: torch.Tensor,
    labels: torch.Tensor,
    cfg: TrainConfig,
) -> list[float]:
    """Cross-entropy training of the skill classifier."""
    optimizer = make_optimizer(model, cfg)
    rng = np.random.default_rng(cfg.seed)
    history = []
    model.train()
    for _ in range(cfg.epochs):
        total, count = 0.0, 0
        for idx in index_batches(windows.shape[0], cfg.batch_size, rng):
            ix = torch.as_tensor(idx, dtype=torch.long)
            with _autocast(cfg.autocast_bf16):
                logits = model(windows[ix])
            loss = F.cross_entropy(logits.float(), labels[ix])
            if not torch.isfinite(loss):
                raise NonFiniteLoss(float(loss.detach()))
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(idx)
            count += len(idx)
        history.append(total / count)
    model.eval()
    model.trained = True
    return history
