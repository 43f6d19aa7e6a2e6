"""Runtime breakdown at paper scale on this machine: trajectory draw,
motion window (with and without contact guidance), per-component.

--json prints a machine-readable summary (used by the acceptance suite,
which measures latency in a fresh process like a real deployment).
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import torch

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from soccergen import frames as fr
from soccergen.diffusion import make_schedule
from soccergen.networks import TrajectoryDenoiser, paper_trajectory_config
from soccergen.rotation import IDENTITY_6D
from soccergen.sampler import GuidanceSchedule, SamplerConfig, sample_motion
from soccergen.skeleton import default_skeleton
from soccergen.trajectory import TargetPoint, sample_trajectory


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    report: dict = {}
    torch.manual_seed(0)
    sk = default_skeleton()
    try:
        from soccergen.harness import cached_overfit_motion

        motion, _ = cached_overfit_motion()
        source = "cached overfit model"
    except Exception:
        from soccergen.networks import MotionDenoiser, paper_motion_config

        motion = MotionDenoiser(paper_motion_config())
        source = "random init"
    traj = TrajectoryDenoiser(paper_trajectory_config()).eval().to(torch.bfloat16)

    past_rows = np.zeros((10, 8))
    past_rows[:, 2:] = IDENTITY_6D
    tp = TargetPoint(vector=np.concatenate([[3.0, 0.0], IDENTITY_6D]))
    for _ in range(3):
        sample_trajectory(traj, fr.SkillLabel.DRIBBLE, tp, past_rows, seed=0)
    times = []
    for s in range(20):
        t0 = time.perf_counter()
        sample_trajectory(traj, fr.SkillLabel.DRIBBLE, tp, past_rows, seed=s)
        times.append(time.perf_counter() - t0)
    report["trajectory_ms"] = 1000 * float(np.median(times))
    if not args.json:
        print(f"trajectory draw (bf16): {report['trajectory_ms']:.1f} ms")

    sched = make_schedule(8, "linear")
    past = torch.zeros(1, 10, 28, 6)
    past[..., 1:25, :] = torch.as_tensor(IDENTITY_6D, dtype=torch.float32)
    trows = torch.zeros(1, 45, 8)
    trows[..., 2:] = torch.as_tensor(IDENTITY_6D, dtype=torch.float32)
    for name, schedule in (("no guidance", GuidanceSchedule.NONE),
                           ("End-2 guidance", GuidanceSchedule.END2)):
        cfg = SamplerConfig(steps=8, schedule=schedule, seed=0)
        sample_motion(motion, sched, 0.0, past, trows, cfg, sk)
        times = []
        for s in range(8):
            t0 = time.perf_counter()
            from dataclasses import replace

            sample_motion(motion, sched, 0.0, past, trows, replace(cfg, seed=s), sk)
            times.append(time.perf_counter() - t0)
        key = "window_ms" if schedule is GuidanceSchedule.NONE else "guided_window_ms"
        report[key] = 1000 * float(np.median(times))
        if not args.json:
            print(f"8-step window, {name} ({source}): {report[key]:.0f} ms")
    if args.json:
        print(json.dumps(report))


if __name__ == "__main__":
    main()
