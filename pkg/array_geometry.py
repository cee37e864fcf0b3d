"""
Uniform rectangular array (URA) index maps and steering vectors.

Indices are 1-based in this layer so the (i_m - 1), (i_n - 1) offsets read
exactly like the array-response formulas; numpy storage stays 0-based.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from exceptions import DomainError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class UraGeometry:
    """Planar array with n_z rows (z axis) and n_y columns (y axis); spacing in wavelengths."""

    n_z: int
    n_y: int
    spacing: float = 0.5

    def __post_init__(self):
        if int(self.n_z) != self.n_z or self.n_z < 1:
            raise DomainError(f"n_z must be a positive integer, got {self.n_z}")
        if int(self.n_y) != self.n_y or self.n_y < 1:
            raise DomainError(f"n_y must be a positive integer, got {self.n_y}")
        if not np.isfinite(self.spacing) or self.spacing <= 0:
            raise DomainError(f"spacing must be positive, got {self.spacing}")

    @property
    def size(self) -> int:
        return self.n_z * self.n_y

    @property
    def phase_scale(self) -> float:
        # 1.0 for half-wavelength spacing
        return self.spacing / 0.5

    @classmethod
    def square(cls, elements: int, spacing: float = 0.5) -> "UraGeometry":
        """Most-square layout with n_z * n_y == elements (n_z is the largest divisor <= sqrt)."""
        if elements < 1:
            raise DomainError(f"element count must be positive, got {elements}")
        n_z = int(np.floor(np.sqrt(elements)))
        while elements % n_z:
            n_z -= 1
        return cls(n_z=n_z, n_y=elements // n_z, spacing=spacing)


@dataclass(frozen=True)
class EffectiveAngles:
    """Dimensionless effective angles (phase step per element divided by pi)."""

    v_z: float
    v_y: float

    def __post_init__(self):
        if not (np.isfinite(self.v_z) and np.isfinite(self.v_y)):
            raise DomainError("effective angles must be finite")

    def __neg__(self) -> "EffectiveAngles":
        return EffectiveAngles(-self.v_z, -self.v_y)


def flat_to_grid(i: int, n_z: int, n_y: Optional[int] = None) -> Tuple[int, int]:
    """Map a 1-based flat index to the 1-based (row, column) pair; n_y bounds the index when given."""
    if n_z < 1:
        raise DomainError(f"n_z must be positive, got {n_z}")
    if i < 1 or (n_y is not None and i > n_z * n_y):
        raise DomainError(f"flat index {i} out of range")
    i_n = -(-i // n_z)
    i_m = i - (i_n - 1) * n_z
    return i_m, i_n


def grid_to_flat(i_m: int, i_n: int, n_z: int) -> int:
    if not 1 <= i_m <= n_z or i_n < 1:
        raise DomainError(f"grid index ({i_m}, {i_n}) out of range for n_z={n_z}")
    return (i_n - 1) * n_z + i_m


def grid_indices(geom: UraGeometry) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized flat_to_grid over 1..size; returns 1-based (i_m, i_n) arrays."""
    flat = np.arange(1, geom.size + 1)
    i_n = -(-flat // geom.n_z)
    i_m = flat - (i_n - 1) * geom.n_z
    return i_m, i_n


def steering_vector(geom: UraGeometry, angles: EffectiveAngles) -> np.ndarray:
    """Array response: entry i is exp(j*pi*(spacing/0.5)*[(i_m-1) v_z + (i_n-1) v_y])."""
    i_m, i_n = grid_indices(geom)
    phase = np.pi * geom.phase_scale * ((i_m - 1) * angles.v_z + (i_n - 1) * angles.v_y)
    return np.exp(1j * phase)


def wavelength_m(carrier_ghz: float) -> float:
    if carrier_ghz <= 0:
        raise DomainError(f"carrier frequency must be positive, got {carrier_ghz} GHz")
    return SPEED_OF_LIGHT / (carrier_ghz * 1e9)
