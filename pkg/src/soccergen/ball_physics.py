"""Rigid soccer-ball simulator with engine-compatible constants.

Combine-mode resolution between the ball and ground materials follows the
engine's priority order (Maximum > Multiply > Minimum > Average):
bounciness combines as max(0.1, 0.05) = 0.1 and friction as the product
0.5 * 0.6 = 0.3.

Integration: the velocity update is multiplicative per-step damping
v <- (v + g dt) * (1 - drag dt); the position advances with the trapezoid
of old/new velocity, which reproduces constant-acceleration trajectories
exactly (the plain rectangle rule drifts ~g*T*dt/2, far above the fidelity
budget). Ground contact clamps the ball to the surface, reflects the
vertical velocity with the combined restitution, applies a Coulomb-style
tangential impulse on bounces and a constant friction deceleration while
rolling, and relaxes spin toward kinematic rolling at 10 /s.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .rotation import matrix_to_rot6d, rot6d_to_matrix, rotation_log

GRAVITY_Y = -9.81


@dataclass(frozen=True)
class BallPhysParams:
    mass: float = 0.43
    drag: float = 0.2
    angular_drag: float = 0.05
    radius: float = 0.11
    ball_friction: float = 0.5       # dynamic == static
    ball_bounciness: float = 0.1
    ground_friction: float = 0.6
    ground_bounciness: float = 0.05
    gravity: tuple[float, float, float] = (0.0, GRAVITY_Y, 0.0)
    dt: float = 0.01

    @property
    def restitution(self) -> float:
        # Bounce Combine: ball=Maximum beats ground=Minimum
        return max(self.ball_bounciness, self.ground_bounciness)

    @property
    def friction(self) -> float:
        # Friction Combine: ball=Multiply beats ground=Average
        return self.ball_friction * self.ground_friction

    @property
    def rest_speed(self) -> float:
        """Reflected vertical speeds below this stick to the ground."""
        return 1.5 * abs(self.gravity[1]) * self.dt


@dataclass(frozen=True)
class BallRigidState:
    position: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.11, 0.0]))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0, 1, 0]))

    def __post_init__(self):
        for name in ("position", "velocity", "angular_velocity", "orientation"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


def _axis_angle_matrix(w: np.ndarray) -> np.ndarray:
    angle = np.linalg.norm(w)
    if angle < 1e-12:
        return np.eye(3)
    k = w / angle
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * (kx @ kx)


ROLL_RATE = 10.0  # /s, exponential approach of spin to kinematic rolling


def step(s: BallRigidState, p: BallPhysParams) -> BallRigidState:
    """Advance one fixed timestep."""
    g = np.asarray(p.gravity)
    damp = float(np.clip(1.0 - p.drag * p.dt, 0.0, 1.0))
    v_new = (s.velocity + g * p.dt) * damp
    w_new = s.angular_velocity * float(np.clip(1.0 - p.angular_drag * p.dt, 0.0, 1.0))
    x_new = s.position + 0.5 * (s.velocity + v_new) * p.dt

    if x_new[1] < p.radius:
        x_new = x_new.copy()
        x_new[1] = p.radius
        v_new = v_new.copy()
        vy = v_new[1]
        if vy < 0.0:
            reflected = p.restitution * (-vy)
            tangential = np.array([v_new[0], 0.0, v_new[2]])
            t_speed = np.linalg.norm(tangential)
            if reflected < p.rest_speed:
                v_new[1] = 0.0
                # rolling contact: constant friction deceleration
                if t_speed > 0.0:
                    drop = min(p.friction * abs(g[1]) * p.dt, t_speed)
                    v_new -= tangential / t_speed * drop
                    t_speed -= drop
            else:
                v_new[1] = reflected
                # Coulomb impulse bound mu*(1+e)*|vy| on the tangential plane
                if t_speed > 0.0:
                    drop = min(p.friction * (1.0 + p.restitution) * (-vy), t_speed)
                    v_new -= tangential / t_speed * drop
                    t_speed -= drop
            # relax spin toward rolling without slipping
            target = np.array([v_new[2], 0.0, -v_new[0]]) / p.radius
            w_new = w_new + (target - w_new) * min(1.0, ROLL_RATE * p.dt)

    rot = _axis_angle_matrix(w_new * p.dt)
    orient = matrix_to_rot6d(rot @ rot6d_to_matrix(s.orientation))
    return BallRigidState(position=x_new, velocity=v_new, angular_velocity=w_new, orientation=orient)


def is_grounded(s: BallRigidState, p: BallPhysParams, tol: float = 1e-6) -> bool:
    return bool(s.position[1] <= p.radius + tol)


def simulate_shot(
    initial: BallRigidState, p: BallPhysParams, duration: float, out_fps: int = 30
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate at p.dt and resample to ``out_fps``.

    Returns (positions (K,3), orientations (K,6)). Stops early once the ball
    is grounded and slower than 5 cm/s. Duration capped at 30 s.
    """
    duration = min(duration, 30.0)
    n_steps = int(round(duration / p.dt))
    states = [initial]
    s = initial
    for _ in range(n_steps):
        s = step(s, p)
        states.append(s)
        if is_grounded(s, p) and s.speed < 0.05:
            break
    times = np.arange(len(states)) * p.dt
    sample_times = np.arange(0.0, times[-1] + 1e-9, 1.0 / out_fps)
    pos = np.stack([st.position for st in states])
    positions = np.stack(
        [np.interp(sample_times, times, pos[:, k]) for k in range(3)], axis=1
    )
    idx = np.minimum(np.round(sample_times / p.dt).astype(int), len(states) - 1)
    orientations = np.stack([states[i].orientation for i in idx])
    return positions, orientations


def velocity_from_frames(
    pos_prev: np.ndarray, pos_last: np.ndarray,
    rot_prev: np.ndarray, rot_last: np.ndarray, fps: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Linear and angular velocity from the last two captured frames.

    Rotations are 6D; the angular velocity is the log map of the relative
    world-frame rotation scaled by the frame rate.
    """
    v = (np.asarray(pos_last, dtype=np.float64) - np.asarray(pos_prev, dtype=np.float64)) * fps
    r_prev = rot6d_to_matrix(rot_prev)
    r_last = rot6d_to_matrix(rot_last)
    w = rotation_log(r_last @ r_prev.T) * fps
    return v, w


def free_roll(
    position: np.ndarray, velocity: np.ndarray, p: BallPhysParams, frames: int, out_fps: int = 30
) -> np.ndarray:
    """Ground-rolling extrapolation used as the untracked-ball fallback.

    Returns (frames, 3) positions sampled at ``out_fps`` starting one output
    frame after the given state.
    """
    s = BallRigidState(position=np.asarray(position, dtype=np.float64),
                       velocity=np.asarray(velocity, dtype=np.float64))
    sub = max(1, int(round(1.0 / (out_fps * p.dt))))
    fine = replace(p, dt=1.0 / (out_fps * sub))
    out = []
    for _ in range(frames):
        for _ in range(sub):
            s = step(s, fine)
        out.append(s.position)
    return np.stack(out) if out else np.zeros((0, 3))
