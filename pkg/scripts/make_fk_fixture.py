"""Regenerate the shared forward-kinematics fixture.

The fixture pins the skeleton, a set of poses (identity, yawed, random), and
their expected global joint positions. The browser cockpit's FK must agree
within 1e-4 m, so this file is the cross-implementation contract.
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from soccergen.rotation import IDENTITY_6D, matrix_to_rot6d, yaw_to_matrix
from soccergen.skeleton import default_skeleton, forward_kinematics

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "fk_fixture.json"


def main() -> None:
    sk = default_skeleton()
    rng = np.random.default_rng(2024)
    cases = []

    def add(name, root, rot):
        pos = forward_kinematics(sk, root, rot)
        cases.append({
            "name": name,
            "root": np.asarray(root).tolist(),
            "rotations": np.asarray(rot).round(12).tolist(),
            "positions": pos.round(12).tolist(),
        })

    identity = np.tile(IDENTITY_6D, (24, 1))
    add("identity_origin", np.zeros(3), identity)
    add("identity_offset", np.array([1.5, 0.95, -2.0]), identity)

    yawed = identity.copy()
    yawed[0] = matrix_to_rot6d(yaw_to_matrix(np.pi / 2))
    add("root_yaw_90", np.array([0.0, 0.95, 0.0]), yawed)

    for i in range(5):
        rot = rng.standard_normal((24, 6)) * 0.3 + identity
        add(f"random_{i}", rng.standard_normal(3), rot)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({
        "skeleton": json.loads(sk.to_json()),
        "tolerance_m": 1e-4,
        "cases": cases,
    }, indent=1))
    print(f"wrote {OUT} ({len(cases)} cases)")


if __name__ == "__main__":
    main()
