"""
Channel synthesis for the BS -> IRS -> user link and the resulting rate.

There is no direct BS-user path: every signal goes through the IRS, so the
effective channel is h^T = g^T diag(xi) G.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from array_geometry import EffectiveAngles, UraGeometry, steering_vector
from exceptions import DomainError

logger = logging.getLogger(__name__)

UNIT_MODULUS_TOL = 1e-9


@dataclass(frozen=True)
class PathSpec:
    """One geometric path of the BS -> IRS channel."""

    gain: complex
    aod: EffectiveAngles
    aoa: EffectiveAngles

    def __post_init__(self):
        if not np.isfinite(self.gain):
            raise DomainError("path gain must be finite")


@dataclass(frozen=True)
class ChannelB2I:
    """BS -> IRS channel, M x N (IRS elements by BS antennas)."""

    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise DomainError(f"channel matrix must be 2-D, got shape {self.matrix.shape}")

    @property
    def irs_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def bs_size(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ReflectChannel:
    """IRS -> user line-of-sight channel alpha * b(angles)."""

    alpha: complex
    angles: EffectiveAngles
    vector: np.ndarray = field(repr=False)

    @classmethod
    def from_angles(cls, alpha: complex, angles: EffectiveAngles, irs_geom: UraGeometry) -> "ReflectChannel":
        return cls(alpha=complex(alpha), angles=angles, vector=alpha * steering_vector(irs_geom, angles))

    @property
    def size(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class PhaseShifts:
    """IRS reflection coefficients xi; every entry must have unit modulus."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=complex)
        if xi.ndim != 1:
            raise DomainError("phase-shift vector must be 1-D")
        if np.any(np.abs(np.abs(xi) - 1.0) > UNIT_MODULUS_TOL):
            raise DomainError("phase shifts must have unit modulus")
        object.__setattr__(self, "xi", xi)

    @classmethod
    def from_phases(cls, phases) -> "PhaseShifts":
        return cls(np.exp(1j * np.asarray(phases, dtype=float)))

    @classmethod
    def ones(cls, size: int) -> "PhaseShifts":
        return cls(np.ones(size, dtype=complex))

    @classmethod
    def project(cls, values) -> "PhaseShifts":
        """Keep only the phase of each entry (zeros map to phase 0)."""
        return cls.from_phases(np.angle(np.asarray(values, dtype=complex)))

    @property
    def size(self) -> int:
        return self.xi.shape[0]


def synthesize_b2i(paths: Sequence[PathSpec], bs_geom: UraGeometry, irs_geom: UraGeometry) -> ChannelB2I:
    """G = sum_l beta_l * b(aoa_l) * a(aod_l)^T."""
    if not paths:
        raise DomainError("at least one propagation path is required")
    matrix = np.zeros((irs_geom.size, bs_geom.size), dtype=complex)
    for path in paths:
        matrix += path.gain * np.outer(steering_vector(irs_geom, path.aoa), steering_vector(bs_geom, path.aod))
    return ChannelB2I(matrix)


def effective_channel(g: ReflectChannel, xi: PhaseShifts, G: ChannelB2I) -> np.ndarray:
    """h with h^T = g^T diag(xi) G, returned as an N-vector."""
    g_vec = g.vector if isinstance(g, ReflectChannel) else np.asarray(g)
    if g_vec.shape[0] != xi.size or G.irs_size != xi.size:
        raise DomainError(
            f"dimension mismatch: g has {g_vec.shape[0]}, xi has {xi.size}, G has {G.irs_size} IRS rows"
        )
    return (g_vec * xi.xi) @ G.matrix


def received_power(h: np.ndarray, w: np.ndarray) -> float:
    """|h^T w|^2 (E|s|^2 = 1 is folded in)."""
    return float(np.abs(h @ w) ** 2)


def achievable_rate(h: np.ndarray, w: np.ndarray, noise_power: float) -> float:
    """R = log2(1 + |h^T w|^2 / sigma0^2) in bits/s/Hz."""
    if not noise_power > 0:
        raise DomainError(f"noise power must be positive, got {noise_power}")
    return float(np.log2(1.0 + received_power(h, w) / noise_power))


def noise_power_from_scenario(density_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in watts from a spectral density and bandwidth."""
    if not bandwidth_hz > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    noise_dbm = density_dbm_per_hz + 10.0 * np.log10(bandwidth_hz)
    return float(10.0 ** ((noise_dbm - 30.0) / 10.0))


def free_space_gain(distance_m: float, wavelength: float, phase: float = 0.0) -> complex:
    """lambda / (4 pi d) with the given carrier phase."""
    if not distance_m > 0:
        raise DomainError(f"distance must be positive, got {distance_m}")
    return complex(wavelength / (4.0 * np.pi * distance_m) * np.exp(1j * phase))


def dbm(watts: float) -> float:
    return float(10.0 * np.log10(watts) + 30.0)


def watts(dbm_value: float) -> float:
    return float(10.0 ** ((dbm_value - 30.0) / 10.0))
