"""Continuous 6D rotation representation and yaw helpers.

Conventions used throughout the package:
  * up axis is +y, the ground plane is y=0;
  * a 6D rotation stores the first two COLUMNS of the rotation matrix,
    concatenated as (a, b) -> shape (..., 6);
  * the reference facing direction is +x; a yaw angle ``phi`` turns the
    forward vector to (cos phi, 0, sin phi).
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateRotation, NotARotation

IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])

_EPS_PARALLEL = 1e-8


def rot6d_to_matrix(r6: np.ndarray) -> np.ndarray:
    """Gram-Schmidt the 6D representation into an orthonormal matrix.

    Accepts any batch shape (..., 6) and returns (..., 3, 3). Raw inputs
    need not be orthonormal; scale and shear are removed.
    """
    r6 = np.asarray(r6, dtype=np.float64)
    if r6.shape[-1] != 6:
        raise DegenerateRotation(f"expected trailing dim 6, got {r6.shape}")
    a, b = r6[..., :3], r6[..., 3:]
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(na <= _EPS_PARALLEL):
        raise DegenerateRotation("first 6D column has (near-)zero norm")
    x = a / na
    y = b - np.sum(x * b, axis=-1, keepdims=True) * x
    ny = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(ny <= _EPS_PARALLEL * np.maximum(1.0, np.linalg.norm(b, axis=-1, keepdims=True))):
        raise DegenerateRotation("6D columns are (near-)parallel")
    y = y / ny
    z = np.cross(x, y)
    return np.stack([x, y, z], axis=-1)


def matrix_to_rot6d(mat: np.ndarray) -> np.ndarray:
    """Inverse embedding: keep the first two columns of a rotation matrix."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.shape[-2:] != (3, 3):
        raise NotARotation(f"expected (...,3,3), got {mat.shape}")
    eye = np.eye(3)
    err = np.abs(np.swapaxes(mat, -1, -2) @ mat - eye).max()
    if err > 1e-6:
        raise NotARotation(f"matrix not orthonormal (max |R^T R - I| = {err:.2e})")
    if np.any(np.linalg.det(mat) < 0.0):
        raise NotARotation("matrix has negative determinant (reflection)")
    return np.concatenate([mat[..., :, 0], mat[..., :, 1]], axis=-1)


def yaw_to_matrix(phi: float | np.ndarray) -> np.ndarray:
    """Rotation about +y mapping the +x forward vector to (cos phi, 0, sin phi)."""
    phi = np.asarray(phi, dtype=np.float64)
    c, s = np.cos(phi), np.sin(phi)
    zero, one = np.zeros_like(c), np.ones_like(c)
    rows = [
        np.stack([c, zero, -s], axis=-1),
        np.stack([zero, one, zero], axis=-1),
        np.stack([s, zero, c], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def yaw_from_matrix(mat: np.ndarray) -> np.ndarray:
    """Yaw angle of the rotation's forward (+x) image projected onto the ground."""
    mat = np.asarray(mat, dtype=np.float64)
    fwd = mat[..., :, 0]
    return np.arctan2(fwd[..., 2], fwd[..., 0])


def yaw_to_rot6d(phi: float | np.ndarray) -> np.ndarray:
    return matrix_to_rot6d(yaw_to_matrix(phi))


def yaw_from_rot6d(r6: np.ndarray) -> np.ndarray:
    return yaw_from_matrix(rot6d_to_matrix(r6))


def wrap_angle(phi: np.ndarray | float) -> np.ndarray:
    """Wrap to (-pi, pi]."""
    return np.asarray(phi) - 2.0 * np.pi * np.round(np.asarray(phi) / (2.0 * np.pi))


def slerp_yaw(phi0: float, phi1: float, w: float) -> float:
    """Shortest-arc interpolation between two yaw angles."""
    return float(phi0 + w * wrap_angle(phi1 - phi0))


def rotation_log(mat: np.ndarray) -> np.ndarray:
    """Axis-angle vector (log map) of a rotation matrix, shape (..., 3)."""
    mat = np.asarray(mat, dtype=np.float64)
    tr = np.clip((np.trace(mat, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(tr)
    axis_raw = np.stack(
        [
            mat[..., 2, 1] - mat[..., 1, 2],
            mat[..., 0, 2] - mat[..., 2, 0],
            mat[..., 1, 0] - mat[..., 0, 1],
        ],
        axis=-1,
    )
    sin = np.sin(angle)
    small = sin < 1e-8
    scale = np.where(small, 0.5, angle / np.where(small, 1.0, 2.0 * sin))
    return axis_raw * scale[..., None]
