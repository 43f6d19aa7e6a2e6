"""Command-line entry points.

    soccergen gen-data --clips 40 --skills dribble,stand --out data/ --seed 7
    soccergen simulate-shot --v0 8,4,0 --w0 0,0,-20 --duration 4 --out shot.traj
    soccergen train-traj --data data/ --out traj.smgn
    soccergen train-motion --data data/ --out motion.smgn
    soccergen init-ckpt --kind motion --scale paper --out motion.smgn
    soccergen eval --gen gen/ --ref ref/ --out report.csv
    soccergen sweep --motion-ckpt motion.smgn --out sweep.csv
    soccergen serve --tcp 0.0.0.0:7350 --ws 0.0.0.0:7351 \
        --traj-ckpt traj.smgn --motion-ckpt motion.smgn
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import logging
from pathlib import Path

import numpy as np

from . import frames as fr

log = logging.getLogger("soccergen.cli")

SKILL_NAMES = {s.name.lower().replace("_", "-"): s for s in fr.SkillLabel}
SKILL_NAMES.update({s.name.lower(): s for s in fr.SkillLabel})
SKILL_NAMES["offballmove"] = fr.SkillLabel.OFF_BALL_MOVE


def _parse_skills(text: str) -> list[fr.SkillLabel]:
    out = []
    for part in text.split(","):
        key = part.strip().lower()
        if key not in SKILL_NAMES:
            raise SystemExit(f"unknown skill {part!r}; choose from {sorted(set(SKILL_NAMES))}")
        out.append(SKILL_NAMES[key])
    return out


def _parse_vec3(text: str) -> np.ndarray:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise SystemExit(f"expected x,y,z, got {text!r}")
    return np.asarray(parts)


def _parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "0.0.0.0", int(port)


def cmd_gen_data(args) -> None:
    from .clipio import DatasetManifest, write_clip
    from .datagen import generate_dataset

    skills = _parse_skills(args.skills)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    clips = generate_dataset(args.clips, skills, seed=args.seed, duration=args.duration)
    paths = []
    for i, clip in enumerate(clips):
        path = out / f"clip_{i:04d}_{fr.SkillLabel(clip.skill).name.lower()}.smgc"
        write_clip(clip, path)
        paths.append(path)
    DatasetManifest.build(paths, seed=args.seed).save(out / "manifest.json")
    print(f"wrote {len(paths)} clips + manifest to {out}")


def cmd_simulate_shot(args) -> None:
    from .ball_physics import BallPhysParams, BallRigidState, simulate_shot
    from .clipio import MotionClip, Provenance, write_clip

    p = BallPhysParams()
    state = BallRigidState(position=np.array([0.0, p.radius, 0.0]),
                           velocity=_parse_vec3(args.v0),
                           angular_velocity=_parse_vec3(args.w0))
    positions, orientations = simulate_shot(state, p, args.duration)
    n = len(positions)
    base = fr.identity_frame()
    frames = []
    for i in range(n):
        rel, w = fr.ball_to_relative(positions[i], np.array([0.0, 0.95, 0.0]))
        vel = (positions[min(i + 1, n - 1)] - positions[i]) * 30.0
        frames.append(fr.MotionFrame(
            human=fr.HumanState(root_pos=np.array([0.0, 0.95, 0.0]),
                                joint_rot=base.human.joint_rot.copy()),
            ball=fr.BallState(rel_pos=rel, velocity=vel, control_weight=w),
            contacts=fr.ContactLabels(ground=np.ones(4), ball=np.zeros(4)),
        ))
    clip = MotionClip(fps=30, skill=fr.SkillLabel.SHOOT, frames=frames,
                      ball_global=positions, provenance=Provenance.SIMULATED)
    write_clip(clip, args.out)
    print(f"simulated {n} frames ({n / 30.0:.2f}s) -> {args.out}")


def _load_clips(directory: str):
    from .clipio import read_clip

    paths = sorted(Path(directory).glob("*.smgc"))
    if not paths:
        raise SystemExit(f"no .smgc clips found in {directory}")
    return [read_clip(p) for p in paths]


def cmd_train_traj(args) -> None:
    from .checkpoint import save_model
    from .harness import train_trajectory_corpus

    clips = _load_clips(args.data)
    model = train_trajectory_corpus(clips, epochs=args.epochs, lr=args.lr, seed=args.seed)
    save_model(model, args.out)
    print(f"saved trajectory model -> {args.out}")


def cmd_train_motion(args) -> None:
    from .checkpoint import save_model
    from .datasets import extract_motion_windows
    from .diffusion import make_schedule
    from .networks import MotionDenoiser, paper_motion_config
    from .skeleton import default_skeleton
    from .training import TrainConfig, fit_motion

    clips = _load_clips(args.data)
    data = extract_motion_windows(clips, stride=args.stride)
    print(f"{data['x0'].shape[0]} windows from {len(clips)} clips")
    model = MotionDenoiser(paper_motion_config(), diffusion_steps=args.steps)
    sched = make_schedule(args.steps, "linear")
    cfg = TrainConfig(lr=args.lr, weight_decay=0.0, batch_size=args.batch_size,
                      epochs=args.epochs, autocast_bf16=True, seed=args.seed)

    def cb(epoch, losses):
        if epoch % 10 == 0:
            print(f"epoch {epoch}: " + " ".join(f"{k}={v:.4f}" for k, v in losses.items()))
        return False

    fit_motion(model, data, sched, default_skeleton(), cfg, epoch_callback=cb)
    save_model(model, args.out)
    print(f"saved motion model -> {args.out}")


def cmd_init_ckpt(args) -> None:
    import torch

    from .checkpoint import save_model
    from .networks import (MotionDenoiser, TrajectoryDenoiser, TransformerConfig,
                           paper_motion_config, paper_trajectory_config)

    torch.manual_seed(args.seed)
    tiny = TransformerConfig(layers=2, heads=2, model_dim=64, ff_dim=128, dropout=0.0)
    if args.kind == "trajectory":
        cfg = paper_trajectory_config() if args.scale == "paper" else tiny
        model = TrajectoryDenoiser(cfg)
    else:
        cfg = paper_motion_config() if args.scale == "paper" else tiny
        model = MotionDenoiser(cfg)
    save_model(model, args.out)
    print(f"initialized {args.scale} {args.kind} checkpoint -> {args.out}")


def cmd_eval(args) -> None:
    import torch

    from . import metrics as M
    from .datasets import extract_motion_windows
    from .skeleton import default_skeleton

    skeleton = default_skeleton()
    gen = extract_motion_windows(_load_clips(args.gen))
    ref = extract_motion_windows(_load_clips(args.ref))
    gen_feats = M.motion_features(gen["x0"], skeleton)
    ref_feats = M.motion_features(ref["x0"], skeleton)
    row = {
        "fid": M.fid(gen_feats, ref_feats),
        "foot_slide_m": M.foot_slide(gen["x0"], skeleton),
        "accel_cm_s2": M.mean_accel(gen["x0"], skeleton),
        "diversity": "",
        "skill_acc": "",
    }
    # diversity: across-sample variance within each skill group
    divs = []
    for s in gen["skill"].unique():
        grids = gen["x0"][gen["skill"] == s]
        if grids.shape[0] >= 2:
            divs.append(M.diversity(M.window_positions(grids, skeleton)))
    if divs:
        row["diversity"] = float(np.mean(divs))
    if args.classifier:
        from .checkpoint import load_model

        clf = load_model(args.classifier)
        clf.trained = True
        row["skill_acc"] = M.skill_accuracy(gen["x0"], gen["skill"].long(), clf)
    with open(args.out, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(row))
        writer.writeheader()
        writer.writerow(row)
    print(f"wrote {args.out}: " + " ".join(f"{k}={v}" for k, v in row.items()))


def cmd_sweep(args) -> None:
    from .checkpoint import load_model
    from .datagen import generate_dataset
    from .datasets import extract_motion_windows
    from .metrics import sweep_harness
    from .sampler import GuidanceSchedule
    from .skeleton import default_skeleton

    model = load_model(args.motion_ckpt)
    skills = _parse_skills(args.skills)
    clips = generate_dataset(args.conditions, skills, seed=args.seed, duration=2.0)
    data = extract_motion_windows(clips, stride=55)
    conditions = {k: data[k] for k in ("past", "traj", "skill")}
    steps = tuple(int(s) for s in args.steps.split(","))
    schedules = tuple(GuidanceSchedule(s.strip().lower()) for s in args.schedules.split(","))
    rows = sweep_harness(model, default_skeleton(), conditions, data["x0"],
                         steps=steps, schedules=schedules, out_csv=args.out)
    for r in rows:
        print(" ".join(f"{k}={v}" for k, v in r.items()))
    print(f"wrote {args.out}")


def cmd_serve(args) -> None:
    from .config import GlobalConfig
    from .sampler import GuidanceSchedule
    from .server import Engine, EngineConfig, serve

    cfg = GlobalConfig.load(args.config) if args.config else GlobalConfig()
    engine_cfg = EngineConfig(
        steps=cfg.schedule.steps,
        guidance_schedule=GuidanceSchedule(cfg.runtime.guidance_schedule),
        guidance=cfg.guidance,
        trajectory_bf16=cfg.runtime.trajectory_bf16,
    )
    engine = Engine.from_checkpoints(args.traj_ckpt, args.motion_ckpt, engine_cfg)
    tcp = _parse_addr(args.tcp) if args.tcp else None
    ws = _parse_addr(args.ws) if args.ws else None
    try:
        asyncio.run(serve(engine, tcp, ws))
    except KeyboardInterrupt:
        print("shutting down")


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(prog="soccergen",
                                     description="Real-time soccer motion generation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic clip dataset")
    p.add_argument("--clips", type=int, required=True)
    p.add_argument("--skills", default="dribble,trick,shoot,stand,celebrate,off-ball-move")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=6.0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("simulate-shot", help="simulate a ball shot trajectory")
    p.add_argument("--v0", required=True, help="initial velocity x,y,z (m/s)")
    p.add_argument("--w0", default="0,0,0", help="initial angular velocity x,y,z (rad/s)")
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_shot)

    p = sub.add_parser("train-traj", help="train the trajectory model on clips")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=220)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_traj)

    p = sub.add_parser("train-motion", help="train the motion model on clips")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--stride", type=int, default=15)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_motion)

    p = sub.add_parser("init-ckpt", help="write a random-init checkpoint (demos, latency tests)")
    p.add_argument("--kind", choices=["trajectory", "motion"], required=True)
    p.add_argument("--scale", choices=["paper", "tiny"], default="paper")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_init_ckpt)

    p = sub.add_parser("eval", help="metric report for generated vs reference clips")
    p.add_argument("--gen", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--classifier", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="denoise-step / guidance-schedule sweep")
    p.add_argument("--motion-ckpt", required=True)
    p.add_argument("--steps", default="2,4,8,16,32")
    p.add_argument("--schedules", default="none,start1,end1,start2,end2,start1end1")
    p.add_argument("--conditions", type=int, default=4)
    p.add_argument("--skills", default="dribble")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="run the real-time generation server")
    p.add_argument("--tcp", default="0.0.0.0:7350")
    p.add_argument("--ws", default="0.0.0.0:7351")
    p.add_argument("--traj-ckpt", required=True)
    p.add_argument("--motion-ckpt", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
