"""
Seeded synthesis of channels and scenario variants.

Gains follow free space: the dominant BS -> IRS path and the IRS -> user link
get magnitude lambda / (4 pi d) with a uniformly random phase. The remaining
path_count - 1 BS -> IRS paths are nlos_offset_db weaker with uniformly random
effective angles in [-1, 1].
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, List

import numpy as np

from array_geometry import EffectiveAngles, wavelength_m
from channel_model import (
    ChannelB2I,
    PathSpec,
    ReflectChannel,
    free_space_gain,
    synthesize_b2i,
)
from location_model import (
    Position3D,
    SeedLike,
    effective_aods_from_positions,
    estimated_reflect_channel,
)

if TYPE_CHECKING:
    from scenario import Scenario

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelSet:
    """Channels known to the designer: G, the estimated reflection channel and its gain."""

    G: ChannelB2I
    g_hat: ReflectChannel
    alpha_hat: complex


def los_path(src: Position3D, dst: Position3D, gain: complex) -> PathSpec:
    """
    Line-of-sight path from the array at src to the array at dst.

    Angles at either end use the same rule as the IRS -> user link:
    (array position - far end) / distance.
    """
    aod, _ = effective_aods_from_positions(src, dst)
    aoa, _ = effective_aods_from_positions(dst, src)
    return PathSpec(gain=gain, aod=aod, aoa=aoa)


def _generator(rng_seed: SeedLike) -> np.random.Generator:
    return rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)


def generate_b2i_paths(scen: "Scenario", rng_seed: SeedLike = None) -> List[PathSpec]:
    rng = _generator(rng_seed)
    wavelength = wavelength_m(scen.carrier_ghz)
    distance = float(np.linalg.norm(scen.bs_pos.as_array() - scen.irs_pos.as_array()))
    dominant = free_space_gain(distance, wavelength, rng.uniform(0.0, 2.0 * np.pi))
    paths = [los_path(scen.bs_pos, scen.irs_pos, dominant)]

    weak = abs(dominant) * 10.0 ** (-scen.nlos_offset_db / 20.0)
    for _ in range(scen.path_count - 1):
        gain = weak * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        aod = EffectiveAngles(*rng.uniform(-1.0, 1.0, size=2))
        aoa = EffectiveAngles(*rng.uniform(-1.0, 1.0, size=2))
        paths.append(PathSpec(gain=complex(gain), aod=aod, aoa=aoa))
    return paths


def generate_channels(scen: "Scenario", rng_seed: SeedLike = None) -> ChannelSet:
    """Synthesize G and the estimated reflection channel for a scenario."""
    rng = _generator(rng_seed)
    G = synthesize_b2i(generate_b2i_paths(scen, rng), scen.bs_geom, scen.irs_geom)

    wavelength = wavelength_m(scen.carrier_ghz)
    user_est = scen.estimated_user
    d_hat = float(np.linalg.norm(scen.irs_pos.as_array() - user_est.as_array()))
    alpha_hat = free_space_gain(d_hat, wavelength, rng.uniform(0.0, 2.0 * np.pi))
    g_hat = estimated_reflect_channel(scen.irs_pos, user_est, alpha_hat, scen.irs_geom)
    logger.debug(f"channels: |G|_F = {np.linalg.norm(G.matrix):.3e}, |alpha| = {abs(alpha_hat):.3e}, "
                 f"d_hat = {d_hat:.2f} m")
    return ChannelSet(G=G, g_hat=g_hat, alpha_hat=alpha_hat)


def random_scenarios(base: "Scenario", count: int, rng_seed: SeedLike = None,
                     user_jitter_m: float = 5.0) -> List["Scenario"]:
    """
    Variants of base with the user moved by up to user_jitter_m per axis and
    a fresh channel seed each; used for paired comparisons across scenarios.
    """
    rng = _generator(rng_seed)
    variants = []
    for _ in range(count):
        offset = rng.uniform(-user_jitter_m, user_jitter_m, size=3)
        user = Position3D.from_array(base.user_true_pos.as_array() + offset)
        variants.append(dataclasses.replace(
            base, user_true_pos=user, user_est_pos=None, seed=int(rng.integers(0, 2 ** 31 - 1))))
    return variants
