"""Evaluation metrics over generated vs reference motion windows, plus the
denoise-step / guidance-schedule sweep harness.

FID uses deterministic handcrafted features (window-pooled mean/std of joint
positions and velocities) rather than a pretrained extractor, so values are
reproducible anywhere but not comparable to numbers computed with learned
features.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path

import numpy as np
import scipy.linalg
import torch

from . import frames as fr
from .errors import ShapeMismatch, SingularCovariance, TooFewFrames, UntrainedClassifier
from .networks import SkillClassifier
from .nn_transforms import grid_joint_positions
from .sampler import GuidanceSchedule, SamplerConfig, sample_motion
from .skeleton import SkeletonDef

FPS = 30.0
FOOT_HEIGHT_THRESH = 0.05
COV_REG = 1e-6


def window_positions(grids: torch.Tensor | np.ndarray, skeleton: SkeletonDef) -> np.ndarray:
    """(N, F, 28, 6) grids -> (N, F, J, 3) joint positions."""
    g = torch.as_tensor(grids, dtype=torch.float64)
    return grid_joint_positions(skeleton, g).numpy()


def motion_features(grids: torch.Tensor | np.ndarray, skeleton: SkeletonDef) -> np.ndarray:
    """Window-pooled joint position/velocity statistics, (N, 288)."""
    pos = window_positions(grids, skeleton)
    vel = np.diff(pos, axis=1) * FPS
    feats = [pos.mean(axis=1), pos.std(axis=1), vel.mean(axis=1), vel.std(axis=1)]
    n = pos.shape[0]
    return np.concatenate([f.reshape(n, -1) for f in feats], axis=1)


def _sqrtm_product_trace(c1: np.ndarray, c2: np.ndarray) -> float:
    """Tr((c1 c2)^(1/2)) via the symmetric form (c1^(1/2) c2 c1^(1/2))^(1/2)."""
    w1, v1 = np.linalg.eigh(c1)
    w1 = np.clip(w1, 0.0, None)
    root1 = (v1 * np.sqrt(w1)) @ v1.T
    inner = root1 @ c2 @ root1
    w = np.linalg.eigvalsh(inner)
    return float(np.sqrt(np.clip(w, 0.0, None)).sum())


def fid(gen_features: np.ndarray, ref_features: np.ndarray) -> float:
    """Frechet distance between Gaussian fits of two feature sets."""
    gen_features = np.asarray(gen_features, dtype=np.float64)
    ref_features = np.asarray(ref_features, dtype=np.float64)
    if gen_features.ndim != 2 or ref_features.ndim != 2 or gen_features.shape[1] != ref_features.shape[1]:
        raise ShapeMismatch("feature sets must be (N, d) with matching d")
    mu1, mu2 = gen_features.mean(0), ref_features.mean(0)
    c1 = np.cov(gen_features, rowvar=False)
    c2 = np.cov(ref_features, rowvar=False)
    c1 = np.atleast_2d(c1) + COV_REG * np.eye(gen_features.shape[1])
    c2 = np.atleast_2d(c2) + COV_REG * np.eye(ref_features.shape[1])
    if not (np.isfinite(c1).all() and np.isfinite(c2).all()):
        raise SingularCovariance("covariance not finite after regularization")
    diff = float(((mu1 - mu2) ** 2).sum())
    return diff + float(np.trace(c1) + np.trace(c2)) - 2.0 * _sqrtm_product_trace(c1, c2)


def fid_sqrtm_oracle(gen_features: np.ndarray, ref_features: np.ndarray) -> float:
    """Independent route through scipy's general matrix square root."""
    mu1, mu2 = gen_features.mean(0), ref_features.mean(0)
    c1 = np.atleast_2d(np.cov(gen_features, rowvar=False)) + COV_REG * np.eye(gen_features.shape[1])
    c2 = np.atleast_2d(np.cov(ref_features, rowvar=False)) + COV_REG * np.eye(ref_features.shape[1])
    s, _ = scipy.linalg.sqrtm(c1 @ c2, disp=False)
    return float(((mu1 - mu2) ** 2).sum() + np.trace(c1 + c2 - 2.0 * np.real(s)))


def foot_slide(grids: torch.Tensor | np.ndarray, skeleton: SkeletonDef,
               height_thresh: float = FOOT_HEIGHT_THRESH) -> float:
    """Mean (over sequences) total horizontal toe travel while the toe stays
    below the height threshold, meters."""
    pos = window_positions(grids, skeleton)
    toes = pos[:, :, list(skeleton.toe_joints), :]
    low = toes[..., 1] < height_thresh
    both_low = low[:, :-1, :] & low[:, 1:, :]
    disp = np.linalg.norm(np.diff(toes[..., [0, 2]], axis=1), axis=-1)
    per_seq = (disp * both_low).sum(axis=(1, 2))
    return float(per_seq.mean())


def mean_accel(grids: torch.Tensor | np.ndarray, skeleton: SkeletonDef) -> float:
    """Mean per-joint second-difference acceleration magnitude, in cm/s^2."""
    pos = window_positions(grids, skeleton)
    if pos.shape[1] < 3:
        raise TooFewFrames("acceleration needs at least 3 frames")
    acc = (pos[:, 2:] - 2 * pos[:, 1:-1] + pos[:, :-2]) * FPS * FPS
    return float(np.linalg.norm(acc, axis=-1).mean() * 100.0)


def diversity(sample_positions: np.ndarray) -> float:
    """Spread of same-condition samples: per joint, the across-sample
    variance of its position (trace of the coordinate covariance, ddof=1),
    averaged over time, then over joints. ``sample_positions`` is
    (S, F, J, 3) with S >= 2."""
    p = np.asarray(sample_positions, dtype=np.float64)
    if p.ndim != 4 or p.shape[0] < 2:
        raise ShapeMismatch("need (S, F, J, 3) with at least 2 samples")
    var = p.var(axis=0, ddof=1).sum(axis=-1)  # (F, J)
    return float(var.mean())


def traj_orient_errors(realized: np.ndarray, planned: np.ndarray,
                       min_step: float = 1e-3) -> tuple[float, float]:
    """Mean angular errors (degrees) between planned and realized root
    movement directions and facings. Rows are trajectory vectors (F, 8);
    displacement frames shorter than ``min_step`` on either side are
    skipped for the direction term."""
    from .rotation import wrap_angle, yaw_from_rot6d

    realized = np.asarray(realized, dtype=np.float64)
    planned = np.asarray(planned, dtype=np.float64)
    if realized.shape != planned.shape:
        raise ShapeMismatch("realized and planned trajectories must align")
    dr = np.diff(realized[:, :2], axis=0)
    dp = np.diff(planned[:, :2], axis=0)
    nr = np.linalg.norm(dr, axis=1)
    np_ = np.linalg.norm(dp, axis=1)
    ok = (nr > min_step) & (np_ > min_step)
    if ok.any():
        cos = (dr[ok] * dp[ok]).sum(1) / (nr[ok] * np_[ok])
        traj_err = float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))).mean())
    else:
        traj_err = 0.0
    yaw_r = yaw_from_rot6d(realized[:, 2:])
    yaw_p = yaw_from_rot6d(planned[:, 2:])
    orient_err = float(np.degrees(np.abs(wrap_angle(yaw_r - yaw_p))).mean())
    return traj_err, orient_err


def skill_accuracy(windows: torch.Tensor, labels: torch.Tensor, classifier: SkillClassifier) -> float:
    """Fraction of windows classified as their conditioning skill."""
    if not classifier.trained:
        raise UntrainedClassifier("train the classifier before evaluating")
    with torch.no_grad():
        pred = classifier(windows.to(next(classifier.parameters()).dtype)).argmax(dim=1)
    return float((pred == labels.long()).float().mean())


SWEEP_COLUMNS = ["steps", "schedule", "inf_time_ms", "fid", "foot_slide_m",
                 "accel_cm_s2", "diversity", "traj_err_deg", "orient_err_deg", "skill_acc"]


def sweep_harness(
    model,
    skeleton: SkeletonDef,
    conditions: dict[str, torch.Tensor],
    ref_grids: torch.Tensor,
    steps: tuple[int, ...] = (2, 4, 8, 16, 32),
    schedules: tuple[GuidanceSchedule, ...] = (GuidanceSchedule.NONE,),
    seeds: tuple[int, ...] = (0, 1),
    classifier: SkillClassifier | None = None,
    out_csv: str | Path | None = None,
    schedule_kind: str = "linear",
) -> list[dict]:
    """Sample across step counts and guidance schedules; report metrics and
    wall-clock per-window inference time. Conditions carry tensors
    past (N,P,28,6), traj (N,F,8), skill (N,)."""
    from .diffusion import make_schedule

    rows = []
    ref_feats = motion_features(ref_grids, skeleton)
    for n_steps in steps:
        sched = make_schedule(n_steps, schedule_kind)
        for gsched in schedules:
            outs, times = [], []
            for seed in seeds:
                cfg = SamplerConfig(steps=n_steps, schedule=gsched, seed=seed)
                t0 = time.perf_counter()
                grids, _ = sample_motion(model, sched, conditions["skill"], conditions["past"],
                                         conditions["traj"], cfg, skeleton)
                times.append((time.perf_counter() - t0) / conditions["past"].shape[0])
                outs.append(grids)
            gen = torch.cat(outs, dim=0)
            feats = motion_features(gen, skeleton)
            pos_by_seed = np.stack([window_positions(o, skeleton) for o in outs])  # (S, N, F, J, 3)
            div = float(np.mean([diversity(pos_by_seed[:, i]) for i in range(pos_by_seed.shape[1])]))
            row = {
                "steps": n_steps,
                "schedule": gsched.value,
                "inf_time_ms": 1000.0 * float(np.median(times)),
                "fid": fid(feats, ref_feats),
                "foot_slide_m": foot_slide(gen, skeleton),
                "accel_cm_s2": mean_accel(gen, skeleton),
                "diversity": div,
                "traj_err_deg": "",
                "orient_err_deg": "",
                "skill_acc": "",
            }
            realized = np.stack([g[:, 0, :][:, [0, 2]] for g in gen.numpy()])  # root ground tracks
            errs = []
            for i in range(gen.shape[0] // len(seeds)):
                r = np.concatenate([realized[i], gen[i, :, 1, :].numpy()], axis=1)
                p = conditions["traj"][i].numpy()
                errs.append(traj_orient_errors(r, p))
            if errs:
                row["traj_err_deg"] = float(np.mean([e[0] for e in errs]))
                row["orient_err_deg"] = float(np.mean([e[1] for e in errs]))
            if classifier is not None and classifier.trained:
                row["skill_acc"] = skill_accuracy(gen, conditions["skill"].repeat(len(seeds)), classifier)
            rows.append(row)
    if out_csv is not None:
        with open(out_csv, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=SWEEP_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    return rows
