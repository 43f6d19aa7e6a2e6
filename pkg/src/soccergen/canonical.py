"""Canonicalization of windows into the local frame of a reference pose.

Both generation stages operate in the local frame of the newest past frame:
the reference root's ground position maps to the origin (height is kept) and
its facing yaw maps to zero. This makes windows translation- and
heading-invariant, so windows cut from anywhere in a clip share structure.

All transforms are exact linear maps; ``to_local`` and ``to_world`` round
trip to floating-point precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import frames as fr
from .rotation import yaw_from_rot6d, yaw_to_matrix


@dataclass(frozen=True)
class CanonicalFrame:
    """Reference ground position (x, z) and yaw defining a local frame."""

    ground_pos: np.ndarray  # (2,)
    yaw: float

    @classmethod
    def from_trajectory_frame(cls, tf: fr.TrajectoryFrame) -> "CanonicalFrame":
        return cls(ground_pos=np.asarray(tf.ground_pos, dtype=np.float64).copy(),
                   yaw=float(yaw_from_rot6d(tf.facing)))

    @classmethod
    def from_root(cls, root_pos: np.ndarray, root_rot6d: np.ndarray) -> "CanonicalFrame":
        root_pos = np.asarray(root_pos, dtype=np.float64)
        return cls(ground_pos=root_pos[[0, 2]].copy(), yaw=float(yaw_from_rot6d(root_rot6d)))

    # -- primitives ----------------------------------------------------------

    def _rot(self) -> np.ndarray:
        return yaw_to_matrix(self.yaw)

    def point_to_local(self, p: np.ndarray) -> np.ndarray:
        """World 3D point -> local (translation on the ground plane + yaw)."""
        p = np.asarray(p, dtype=np.float64).copy()
        p = p - np.array([self.ground_pos[0], 0.0, self.ground_pos[1]])
        return p @ self._rot()  # R^T p, row-vector form

    def point_to_world(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64) @ self._rot().T
        return p + np.array([self.ground_pos[0], 0.0, self.ground_pos[1]])

    def vector_to_local(self, v: np.ndarray) -> np.ndarray:
        """Rotate a free vector (no translation)."""
        return np.asarray(v, dtype=np.float64) @ self._rot()

    def vector_to_world(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.float64) @ self._rot().T

    def matrix_to_local(self, m: np.ndarray) -> np.ndarray:
        return self._rot().T @ np.asarray(m, dtype=np.float64)

    def matrix_to_world(self, m: np.ndarray) -> np.ndarray:
        return self._rot() @ np.asarray(m, dtype=np.float64)

    # -- token grids ----------------------------------------------------------

    def _rot6d_rows(self, rows: np.ndarray, to_local: bool) -> np.ndarray:
        # Left-rotating a rotation rotates both stored basis columns; this
        # commutes with the Gram-Schmidt applied later, so raw (noisy) 6D
        # rows transform without needing to be valid rotations.
        f = self.vector_to_local if to_local else self.vector_to_world
        return np.concatenate([f(rows[..., :3]), f(rows[..., 3:])], axis=-1)

    def grid_to_local(self, grid: np.ndarray) -> np.ndarray:
        """Canonicalize (..., 28, 6) token grids (copy; input untouched)."""
        grid = np.asarray(grid, dtype=np.float64).copy()
        grid[..., fr.ROOT_ROW, :3] = self.point_to_local(grid[..., fr.ROOT_ROW, :3])
        grid[..., 1, :] = self._rot6d_rows(grid[..., 1, :], True)
        grid[..., fr.BALL_POS_ROW, :3] = self.vector_to_local(grid[..., fr.BALL_POS_ROW, :3])
        grid[..., fr.BALL_VEL_ROW, :3] = self.vector_to_local(grid[..., fr.BALL_VEL_ROW, :3])
        return grid

    def grid_to_world(self, grid: np.ndarray) -> np.ndarray:
        grid = np.asarray(grid, dtype=np.float64).copy()
        grid[..., fr.ROOT_ROW, :3] = self.point_to_world(grid[..., fr.ROOT_ROW, :3])
        grid[..., 1, :] = self._rot6d_rows(grid[..., 1, :], False)
        grid[..., fr.BALL_POS_ROW, :3] = self.vector_to_world(grid[..., fr.BALL_POS_ROW, :3])
        grid[..., fr.BALL_VEL_ROW, :3] = self.vector_to_world(grid[..., fr.BALL_VEL_ROW, :3])
        return grid

    # -- trajectory rows (F, 8) -----------------------------------------------

    def traj_to_local(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64).copy()
        p3 = np.zeros(rows.shape[:-1] + (3,))
        p3[..., 0] = rows[..., 0] - self.ground_pos[0]
        p3[..., 2] = rows[..., 1] - self.ground_pos[1]
        p3 = p3 @ self._rot()
        rows[..., 0], rows[..., 1] = p3[..., 0], p3[..., 2]
        rows[..., 2:] = self._rot6d_rows(rows[..., 2:], True)
        return rows

    def traj_to_world(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64).copy()
        p3 = np.zeros(rows.shape[:-1] + (3,))
        p3[..., 0], p3[..., 2] = rows[..., 0], rows[..., 1]
        p3 = p3 @ self._rot().T
        rows[..., 0] = p3[..., 0] + self.ground_pos[0]
        rows[..., 1] = p3[..., 2] + self.ground_pos[1]
        rows[..., 2:] = self._rot6d_rows(rows[..., 2:], False)
        return rows
