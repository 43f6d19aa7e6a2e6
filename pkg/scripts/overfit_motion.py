"""Train (or refresh) the cached overfit motion model used by the
acceptance suite: paper-scale model memorizing 32 synthetic clips."""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from soccergen.harness import cached_overfit_motion


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget-s", type=float, default=1680.0)
    ap.add_argument("--fresh", action="store_true", help="ignore the cache")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    if args.fresh:
        from soccergen.harness import _cache_paths

        for p in _cache_paths("motion_overfit"):
            p.unlink(missing_ok=True)
    model, meta = cached_overfit_motion(budget_s=args.budget_s)
    print(f"joint RMSE {meta['rmse'] * 100:.2f} cm, "
          f"simple loss reduction {meta['simple_reduction'] * 100:.1f}% "
          f"({meta['epochs']} epochs)")


if __name__ == "__main__":
    main()
