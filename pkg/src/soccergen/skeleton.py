"""Skeleton definition and forward kinematics (24-joint SMPL-style layout)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch
from .rotation import rot6d_to_matrix

ROOT_SENTINEL = -1

# SMPL-style joint order; forward = +x, up = +y, lateral = +/-z.
JOINT_NAMES = [
    "pelvis", "l_hip", "r_hip", "spine1", "l_knee", "r_knee", "spine2",
    "l_ankle", "r_ankle", "spine3", "l_toe", "r_toe", "neck", "l_collar",
    "r_collar", "head", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
    "l_wrist", "r_wrist", "l_hand", "r_hand",
]

_DEFAULT_PARENTS = [
    ROOT_SENTINEL, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12,
    13, 14, 16, 17, 18, 19, 20, 21,
]

# Rest offsets in meters (anthropometric, T-pose with arms along +/-z).
_DEFAULT_OFFSETS = [
    [0.00, 0.00, 0.00],    # pelvis
    [0.00, -0.08, 0.09],   # l_hip
    [0.00, -0.08, -0.09],  # r_hip
    [0.00, 0.11, 0.00],    # spine1
    [0.00, -0.42, 0.00],   # l_knee
    [0.00, -0.42, 0.00],   # r_knee
    [0.00, 0.13, 0.00],    # spine2
    [0.00, -0.41, 0.00],   # l_ankle
    [0.00, -0.41, 0.00],   # r_ankle
    [0.00, 0.14, 0.00],    # spine3
    [0.13, -0.07, 0.00],   # l_toe
    [0.13, -0.07, 0.00],   # r_toe
    [0.00, 0.20, 0.00],    # neck
    [0.00, 0.15, 0.06],    # l_collar
    [0.00, 0.15, -0.06],   # r_collar
    [0.00, 0.12, 0.00],    # head
    [0.00, 0.00, 0.10],    # l_shoulder
    [0.00, 0.00, -0.10],   # r_shoulder
    [0.00, 0.00, 0.26],    # l_elbow
    [0.00, 0.00, -0.26],   # r_elbow
    [0.00, 0.00, 0.25],    # l_wrist
    [0.00, 0.00, -0.25],   # r_wrist
    [0.00, 0.00, 0.08],    # l_hand
    [0.00, 0.00, -0.08],   # r_hand
]

L_HIP, R_HIP = 1, 2
L_KNEE, R_KNEE = 4, 5
L_ANKLE, R_ANKLE = 7, 8
L_TOE, R_TOE = 10, 11


@dataclass(frozen=True)
class SkeletonDef:
    """Joint hierarchy with rest offsets.

    ``parent[root] == -1``; every other joint's parent index is smaller than
    its own, so a single forward pass composes transforms root-to-leaf.
    """

    joint_count: int
    parent: np.ndarray          # (J,) int
    offset: np.ndarray          # (J, 3) float64, meters
    foot_joints: tuple[int, ...] = (L_ANKLE, R_ANKLE, L_TOE, R_TOE)
    toe_joints: tuple[int, ...] = (L_TOE, R_TOE)
    names: tuple[str, ...] = field(default=tuple(JOINT_NAMES))

    def __post_init__(self):
        parent = np.asarray(self.parent, dtype=np.int64)
        offset = np.asarray(self.offset, dtype=np.float64)
        if parent.shape != (self.joint_count,):
            raise ShapeMismatch("parent array length != joint_count")
        if offset.shape != (self.joint_count, 3):
            raise ShapeMismatch("offset array must be (joint_count, 3)")
        if parent[0] != ROOT_SENTINEL:
            raise ValueError("joint 0 must be the root (parent == -1)")
        for j in range(1, self.joint_count):
            if not 0 <= parent[j] < j:
                raise ValueError("parent indices must be acyclic and topologically ordered")
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "offset", offset)

    def to_json(self) -> str:
        return json.dumps(
            {
                "joint_count": self.joint_count,
                "parents": self.parent.tolist(),
                "offsets": self.offset.tolist(),
                "foot_joints": list(self.foot_joints),
                "toe_joints": list(self.toe_joints),
                "names": list(self.names),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "SkeletonDef":
        d = json.loads(text)
        return cls(
            joint_count=d["joint_count"],
            parent=np.asarray(d["parents"]),
            offset=np.asarray(d["offsets"]),
            foot_joints=tuple(d["foot_joints"]),
            toe_joints=tuple(d["toe_joints"]),
            names=tuple(d.get("names", JOINT_NAMES[: d["joint_count"]])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "SkeletonDef":
        return cls.from_json(Path(path).read_text())


def default_skeleton() -> SkeletonDef:
    return SkeletonDef(
        joint_count=24,
        parent=np.asarray(_DEFAULT_PARENTS),
        offset=np.asarray(_DEFAULT_OFFSETS),
    )


def forward_kinematics(
    skeleton: SkeletonDef, root_pos: np.ndarray, joint_rot6d: np.ndarray
) -> np.ndarray:
    """Global joint positions from local 6D rotations.

    position[j] = position[parent[j]] + GlobalRot[parent[j]] @ offset[j],
    with GlobalRot composed root-to-leaf and position[0] = root_pos.

    Accepts a single pose (J, 6) or a batch (..., J, 6); returns (..., J, 3).
    """
    root_pos = np.asarray(root_pos, dtype=np.float64)
    joint_rot6d = np.asarray(joint_rot6d, dtype=np.float64)
    J = skeleton.joint_count
    if joint_rot6d.shape[-2:] != (J, 6):
        raise ShapeMismatch(f"joint rotations must be (...,{J},6), got {joint_rot6d.shape}")
    if root_pos.shape[-1] != 3 or root_pos.shape[:-1] != joint_rot6d.shape[:-2]:
        raise ShapeMismatch("root_pos batch shape must match joint rotations")
    local = rot6d_to_matrix(joint_rot6d)                      # (..., J, 3, 3)
    glob = np.empty_like(local)
    pos = np.empty(joint_rot6d.shape[:-2] + (J, 3))
    glob[..., 0, :, :] = local[..., 0, :, :]
    pos[..., 0, :] = root_pos
    for j in range(1, J):
        p = skeleton.parent[j]
        gp = glob[..., p, :, :]
        pos[..., j, :] = pos[..., p, :] + (gp @ skeleton.offset[j])
        glob[..., j, :, :] = gp @ local[..., j, :, :]
    return pos


def global_rotations(skeleton: SkeletonDef, joint_rot6d: np.ndarray) -> np.ndarray:
    """Root-to-leaf composed rotation matrices, shape (..., J, 3, 3)."""
    local = rot6d_to_matrix(np.asarray(joint_rot6d, dtype=np.float64))
    glob = np.empty_like(local)
    glob[..., 0, :, :] = local[..., 0, :, :]
    for j in range(1, skeleton.joint_count):
        glob[..., j, :, :] = glob[..., skeleton.parent[j], :, :] @ local[..., j, :, :]
    return glob
