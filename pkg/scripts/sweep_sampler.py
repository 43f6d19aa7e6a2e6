"""Denoise-step x guidance-schedule sweep over a trained motion model.

Emits the metric/inference-time table as CSV (the runtime-vs-quality
trade-off harness). Uses the cached overfit model when no checkpoint is
given.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from soccergen import frames as fr
from soccergen.datagen import generate_dataset
from soccergen.datasets import extract_motion_windows
from soccergen.metrics import sweep_harness
from soccergen.sampler import GuidanceSchedule
from soccergen.skeleton import default_skeleton


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--motion-ckpt", default=None, help="default: cached overfit model")
    ap.add_argument("--steps", default="2,4,8,16,32")
    ap.add_argument("--schedules", default="none,start1,end1,start2,end2,start1end1")
    ap.add_argument("--conditions", type=int, default=6)
    ap.add_argument("--seeds", default="0,1")
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()

    if args.motion_ckpt:
        from soccergen.checkpoint import load_model

        model = load_model(args.motion_ckpt)
    else:
        from soccergen.harness import cached_overfit_motion

        model, _ = cached_overfit_motion()

    clips = generate_dataset(args.conditions, [fr.SkillLabel.DRIBBLE], seed=77, duration=2.0)
    data = extract_motion_windows(clips, stride=55)
    rows = sweep_harness(
        model, default_skeleton(),
        {k: data[k] for k in ("past", "traj", "skill")}, data["x0"],
        steps=tuple(int(s) for s in args.steps.split(",")),
        schedules=tuple(GuidanceSchedule(s.strip()) for s in args.schedules.split(",")),
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        out_csv=args.out,
    )
    cols = ["steps", "schedule", "inf_time_ms", "fid", "foot_slide_m", "accel_cm_s2", "diversity"]
    print(" | ".join(f"{c:>12}" for c in cols))
    for r in rows:
        print(" | ".join(f"{r[c]:>12.4f}" if isinstance(r[c], float) else f"{str(r[c]):>12}"
                         for c in cols))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
