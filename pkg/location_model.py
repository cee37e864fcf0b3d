"""
Location-based estimation of the IRS -> user channel.

The reflection channel is rebuilt from the user position reported by a
positioning system. A position error Delta = true - estimate turns into a
per-element phase error, to first order [e]_i = exp(j*pi*f_i^T Delta), with
the sensitivity rows f_i computed below.
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from array_geometry import EffectiveAngles, UraGeometry, grid_indices
from channel_model import ReflectChannel
from exceptions import DomainError

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise DomainError("position coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def shifted(self, delta: "LocationError") -> "Position3D":
        return Position3D(*(self.as_array() + delta.delta))

    @classmethod
    def from_array(cls, values) -> "Position3D":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)


@dataclass(frozen=True)
class LocationError:
    """Delta = true position - estimated position, in meters (x, y, z)."""

    delta: np.ndarray

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float).reshape(3)
        object.__setattr__(self, "delta", delta)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.delta))

    def __neg__(self) -> "LocationError":
        return LocationError(-self.delta)


@dataclass(frozen=True)
class UncertaintyBall:
    """Spherical bound ||Delta|| <= radius (meters)."""

    radius: float

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius < 0:
            raise DomainError(f"uncertainty radius must be >= 0, got {self.radius}")


@dataclass(frozen=True)
class ErrorSensitivity:
    """
    Phase sensitivity of every IRS element to a user position error.

    f: M x 3 rows f_i = [a, b, c] (x, y, z order), already including the
       spacing/0.5 phase factor of the array.
    d_hat: estimated IRS-user distance.
    v_hat: estimated direction cosines (v_x, v_y, v_z).
    """

    f: np.ndarray = field(repr=False)
    d_hat: float
    v_hat: np.ndarray

    @property
    def size(self) -> int:
        return self.f.shape[0]

    @property
    def scaled(self) -> np.ndarray:
        """Real rows p_m = pi * d_hat * f_m, so that f_bar_m = j * p_m."""
        return np.pi * self.d_hat * self.f


def _direction_cosines(irs: Position3D, user: Position3D) -> Tuple[np.ndarray, float]:
    offset = irs.as_array() - user.as_array()
    distance = float(np.linalg.norm(offset))
    if distance == 0.0:
        raise DomainError("IRS and user positions coincide (zero distance)")
    return offset / distance, distance


def effective_aods_from_positions(irs: Position3D, user: Position3D) -> Tuple[EffectiveAngles, float]:
    """Effective AODs v_y = (y_I - y_U)/d, v_z = (z_I - z_U)/d and the distance d."""
    cosines, distance = _direction_cosines(irs, user)
    return EffectiveAngles(v_z=float(cosines[2]), v_y=float(cosines[1])), distance


def estimated_reflect_channel(irs: Position3D, user_est: Position3D, alpha: complex,
                              irs_geom: UraGeometry) -> ReflectChannel:
    angles, _ = effective_aods_from_positions(irs, user_est)
    return ReflectChannel.from_angles(alpha, angles, irs_geom)


def exact_reflect_channel(irs: Position3D, user_est: Position3D, delta: LocationError,
                          alpha_hat: complex, irs_geom: UraGeometry) -> ReflectChannel:
    """Channel at the true position user_est + Delta; amplitude rescaled by d_hat / d_true."""
    _, d_hat = _direction_cosines(irs, user_est)
    angles, d_true = effective_aods_from_positions(irs, user_est.shifted(delta))
    return ReflectChannel.from_angles(alpha_hat * d_hat / d_true, angles, irs_geom)


def exact_reflect_vectors(irs: Position3D, user_est: Position3D, deltas: np.ndarray,
                          alpha_hat: complex, irs_geom: UraGeometry) -> np.ndarray:
    """Vectorized exact_reflect_channel for a (T, 3) batch of errors; returns (T, M)."""
    _, d_hat = _direction_cosines(irs, user_est)
    offsets = irs.as_array()[None, :] - (user_est.as_array()[None, :] + deltas)
    distances = np.linalg.norm(offsets, axis=1)
    if np.any(distances == 0.0):
        raise DomainError("an error sample places the user on the IRS")
    v_y = offsets[:, 1] / distances
    v_z = offsets[:, 2] / distances
    i_m, i_n = grid_indices(irs_geom)
    phase = np.pi * irs_geom.phase_scale * (np.outer(v_z, i_m - 1) + np.outer(v_y, i_n - 1))
    amplitude = alpha_hat * d_hat / distances
    return amplitude[:, None] * np.exp(1j * phase)


def error_sensitivity(irs: Position3D, user_est: Position3D, irs_geom: UraGeometry) -> ErrorSensitivity:
    """Rows f_i = (i_m - 1) * grad(v_z) + (i_n - 1) * grad(v_y), gradients taken w.r.t. the user position."""
    cosines, d_hat = _direction_cosines(irs, user_est)
    v_x, v_y, v_z = cosines
    grad_z = np.array([v_z * v_x, v_z * v_y, v_z ** 2 - 1.0]) / d_hat
    grad_y = np.array([v_y * v_x, v_y ** 2 - 1.0, v_y * v_z]) / d_hat
    i_m, i_n = grid_indices(irs_geom)
    f = irs_geom.phase_scale * (np.outer(i_m - 1, grad_z) + np.outer(i_n - 1, grad_y))
    return ErrorSensitivity(f=f, d_hat=d_hat, v_hat=cosines)


def linearized_aod_error(sens: ErrorSensitivity, delta: LocationError) -> Tuple[float, float]:
    """First-order (eps_z, eps_y) of the effective AODs for a position error."""
    v_x, v_y, v_z = sens.v_hat
    dx, dy, dz = delta.delta
    eps_z = ((v_z ** 2 - 1.0) * dz + v_z * v_y * dy + v_z * v_x * dx) / sens.d_hat
    eps_y = ((v_y ** 2 - 1.0) * dy + v_y * v_z * dz + v_y * v_x * dx) / sens.d_hat
    return float(eps_z), float(eps_y)


def error_vector(sens: ErrorSensitivity, delta: LocationError) -> np.ndarray:
    """[e]_i = exp(j*pi*f_i^T Delta)."""
    return np.exp(1j * np.pi * (sens.f @ delta.delta))


def model_reflect_vectors(g_hat: ReflectChannel, sens: ErrorSensitivity, deltas: np.ndarray) -> np.ndarray:
    """g_hat * e(Delta) for a (T, 3) batch of errors; returns (T, M)."""
    return g_hat.vector[None, :] * np.exp(1j * np.pi * (deltas @ sens.f.T))


def _generator(rng_seed: SeedLike) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def sample_errors(ball: UncertaintyBall, count: int, rng_seed: SeedLike = None) -> np.ndarray:
    """Draw count errors uniformly in the closed ball; returns (count, 3)."""
    rng = _generator(rng_seed)
    if ball.radius == 0.0:
        return np.zeros((count, 3))
    directions = rng.standard_normal((count, 3))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = ball.radius * rng.random(count) ** (1.0 / 3.0)
    return directions / norms * radii[:, None]


def sample_error(ball: UncertaintyBall, rng_seed: SeedLike = None) -> LocationError:
    return LocationError(sample_errors(ball, 1, rng_seed)[0])
