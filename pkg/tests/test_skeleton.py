import numpy as np
import pytest
import torch

from soccergen.frames import NUM_JOINTS
from soccergen.nn_transforms import forward_kinematics_t
from soccergen.rotation import IDENTITY_6D, matrix_to_rot6d, rot6d_to_matrix
from soccergen.skeleton import SkeletonDef, default_skeleton, forward_kinematics


def fk_homogeneous_oracle(skeleton, root_pos, joint_rot6d):
    """Brute-force FK via explicit 4x4 homogeneous transforms."""
    J = skeleton.joint_count
    mats = rot6d_to_matrix(joint_rot6d)
    T = [None] * J
    t0 = np.eye(4)
    t0[:3, 3] = root_pos
    t0[:3, :3] = mats[0]
    T[0] = t0
    for j in range(1, J):
        local = np.eye(4)
        local[:3, 3] = skeleton.offset[j]
        local[:3, :3] = mats[j]
        T[j] = T[skeleton.parent[j]] @ local
    return np.stack([T[j][:3, 3] for j in range(J)])


def random_skeleton(rng, max_joints=24, max_depth=5):
    n = int(rng.integers(2, max_joints + 1))
    parent = [-1]
    depth = [0]
    for j in range(1, n):
        candidates = [i for i in range(j) if depth[i] < max_depth]
        p = int(rng.choice(candidates))
        parent.append(p)
        depth.append(depth[p] + 1)
    return SkeletonDef(
        joint_count=n,
        parent=np.asarray(parent),
        offset=rng.uniform(-0.5, 0.5, (n, 3)),
        foot_joints=(n - 1,),
        toe_joints=(n - 1,),
        names=tuple(f"j{i}" for i in range(n)),
    )


def random_pose(rng, n):
    r6 = rng.standard_normal((n, 6))
    return rng.standard_normal(3), r6


def test_identity_rotations_sum_offsets():
    sk = default_skeleton()
    root = np.array([1.0, 2.0, 3.0])
    rot = np.tile(IDENTITY_6D, (24, 1))
    pos = forward_kinematics(sk, root, rot)
    # walk each chain: cumulative offsets
    for j in range(24):
        expect = root.copy()
        k = j
        chain = []
        while k != 0:
            chain.append(k)
            k = int(sk.parent[k])
        for k in chain:
            expect += sk.offset[k]
        assert np.allclose(pos[j], expect, atol=1e-12)


def test_zero_offsets_collapse():
    rng = np.random.default_rng(3)
    sk = SkeletonDef(
        joint_count=4,
        parent=np.array([-1, 0, 1, 2]),
        offset=np.zeros((4, 3)),
        foot_joints=(3,),
        toe_joints=(3,),
        names=("a", "b", "c", "d"),
    )
    root, rot = random_pose(rng, 4)
    pos = forward_kinematics(sk, root, rot)
    assert np.allclose(pos, root[None, :], atol=1e-12)


def test_yawed_chain_by_hand():
    # 3 joints along +x; root yawed 90 degrees about +y maps +x to +z
    sk = SkeletonDef(
        joint_count=3,
        parent=np.array([-1, 0, 1]),
        offset=np.array([[0.0, 0, 0], [1.0, 0, 0], [1.0, 0, 0]]),
        foot_joints=(2,),
        toe_joints=(2,),
        names=("r", "a", "b"),
    )
    yaw90 = matrix_to_rot6d(np.array([[0.0, 0, -1], [0, 1, 0], [1, 0, 0]]))
    rot = np.stack([yaw90, IDENTITY_6D, IDENTITY_6D])
    pos = forward_kinematics(sk, np.zeros(3), rot)
    assert np.allclose(pos[1], [0, 0, 1], atol=1e-12)
    assert np.allclose(pos[2], [0, 0, 2], atol=1e-12)


def test_fk_matches_homogeneous_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        sk = random_skeleton(rng)
        root, rot = random_pose(rng, sk.joint_count)
        got = forward_kinematics(sk, root, rot)
        want = fk_homogeneous_oracle(sk, root, rot)
        assert np.abs(got - want).max() < 1e-9


def test_torch_fk_matches_numpy():
    rng = np.random.default_rng(11)
    sk = default_skeleton()
    root, rot = random_pose(rng, NUM_JOINTS)
    got = forward_kinematics_t(
        sk, torch.as_tensor(root, dtype=torch.float64), torch.as_tensor(rot, dtype=torch.float64)
    ).numpy()
    want = forward_kinematics(sk, root, rot)
    assert np.abs(got - want).max() < 1e-12


def test_batched_fk():
    rng = np.random.default_rng(13)
    sk = default_skeleton()
    roots = rng.standard_normal((5, 3))
    rots = rng.standard_normal((5, 24, 6))
    batch = forward_kinematics(sk, roots, rots)
    for i in range(5):
        assert np.allclose(batch[i], forward_kinematics(sk, roots[i], rots[i]), atol=1e-12)


def test_json_round_trip(tmp_path):
    sk = default_skeleton()
    path = tmp_path / "sk.json"
    sk.save(path)
    sk2 = SkeletonDef.load(path)
    assert sk2.joint_count == sk.joint_count
    assert np.array_equal(sk2.parent, sk.parent)
    assert np.allclose(sk2.offset, sk.offset)
    assert sk2.foot_joints == sk.foot_joints
    assert sk2.toe_joints == sk.toe_joints


def test_invalid_hierarchy_rejected():
    with pytest.raises(ValueError):
        SkeletonDef(joint_count=2, parent=np.array([-1, 1]), offset=np.zeros((2, 3)),
                    foot_joints=(1,), toe_joints=(1,), names=("a", "b"))
