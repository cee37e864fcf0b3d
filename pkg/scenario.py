"""
Scenario configuration: defaults, profiles, the key-value file format and
the translation into the optimizer's inputs.

Scenario files are flat ``key = value`` text with units in the key names,
``#`` comments and comma-separated triples for positions::

    profile = desk
    upsilon_m = 2
    target_rate_bps_hz = 4
    user_true_pos_m = 20, 20, -20
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from array_geometry import UraGeometry
from channel_model import noise_power_from_scenario
from data_generator import ChannelSet, generate_channels
from exceptions import DomainError, ScenarioError
from location_model import Position3D, UncertaintyBall, error_sensitivity
from robust_optimizer import DesignContext, OptimizerConfig

logger = logging.getLogger(__name__)

PROFILES: Dict[str, Dict[str, Any]] = {
    "desk": {"bs_nz": 2, "bs_ny": 2, "irs_nz": 4, "irs_ny": 4, "trials": 2000, "sdp_tol": 1e-8},
    "paper": {"bs_nz": 4, "bs_ny": 4, "irs_nz": 10, "irs_ny": 10, "trials": 10000, "sdp_tol": 1e-6},
}

EVAL_MODES = ("exact", "model")


@dataclass(frozen=True)
class Scenario:
    carrier_ghz: float = 28.0
    bandwidth_hz: float = 1e8
    noise_density_dbm_hz: float = -169.0
    irs_pos: Position3D = Position3D(0.0, 0.0, 0.0)
    bs_pos: Position3D = Position3D(100.0, -100.0, 0.0)
    user_true_pos: Position3D = Position3D(20.0, 20.0, -20.0)
    user_est_pos: Optional[Position3D] = None
    bs_geom: UraGeometry = UraGeometry(2, 2)
    irs_geom: UraGeometry = UraGeometry(4, 4)
    upsilon_m: float = 4.0
    target_rate: float = 4.0
    path_count: int = 3
    nlos_offset_db: float = 10.0
    seed: Optional[int] = None
    profile: str = "desk"
    trials: int = 2000
    eval_mode: str = "model"
    epsilon: float = 1e-3
    max_outer_iters: int = 30
    randomization_count: int = 200
    power_scale_cap: float = 1e6
    sdp_tol: float = 1e-8
    workers: int = 1

    def __post_init__(self):
        checks = [
            ("carrier_ghz", self.carrier_ghz > 0, "must be positive"),
            ("bandwidth_hz", self.bandwidth_hz > 0, "must be positive"),
            ("upsilon_m", self.upsilon_m >= 0, "must be >= 0"),
            ("target_rate_bps_hz", self.target_rate > 0, "must be positive"),
            ("path_count", self.path_count >= 1, "must be >= 1"),
            ("profile", self.profile in PROFILES, f"must be one of {sorted(PROFILES)}"),
            ("trials", self.trials >= 1, "must be >= 1"),
            ("eval_mode", self.eval_mode in EVAL_MODES, f"must be one of {EVAL_MODES}"),
            ("epsilon", self.epsilon > 0, "must be positive"),
            ("max_outer_iters", self.max_outer_iters >= 1, "must be >= 1"),
            ("randomization_count", self.randomization_count >= 1, "must be >= 1"),
            ("power_scale_cap", self.power_scale_cap >= 1, "must be >= 1"),
            ("sdp_tol", self.sdp_tol > 0, "must be positive"),
            ("workers", self.workers >= 1, "must be >= 1"),
        ]
        for key, ok, message in checks:
            if not ok:
                raise ScenarioError(message, field=key)
        if np.allclose(self.irs_pos.as_array(), self.estimated_user.as_array()):
            raise ScenarioError("user and IRS positions coincide", field="user_est_pos_m")

    @property
    def estimated_user(self) -> Position3D:
        return self.user_est_pos if self.user_est_pos is not None else self.user_true_pos

    @property
    def noise_power(self) -> float:
        return noise_power_from_scenario(self.noise_density_dbm_hz, self.bandwidth_hz)

    @property
    def ball(self) -> UncertaintyBall:
        return UncertaintyBall(self.upsilon_m)

    def optimizer_config(self, rng_seed=None) -> OptimizerConfig:
        return OptimizerConfig(
            target_rate_r=self.target_rate,
            epsilon=self.epsilon,
            max_outer_iters=self.max_outer_iters,
            randomization_count=self.randomization_count,
            power_scale_cap=self.power_scale_cap,
            rng_seed=rng_seed,
            sdp_tol=self.sdp_tol,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Flat dictionary in scenario-file keys; the inverse of scenario_from_dict."""
        values = {}
        for key, spec in FIELDS.items():
            value = getattr(self, spec.attr)
            if value is None:
                continue
            values[key] = spec.dump(value)
        return values


@dataclass(frozen=True)
class _FieldSpec:
    attr: str
    parse: Callable[[str], Any]
    dump: Callable[[Any], Any] = lambda v: v


def _parse_triple(text: str) -> Tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got '{text}'")
    return tuple(float(p) for p in parts)


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got '{text}'")
    return int(value)


def _dump_position(pos: Position3D) -> list:
    return [float(v) for v in pos.as_array()]


FIELDS: Dict[str, _FieldSpec] = {
    "carrier_ghz": _FieldSpec("carrier_ghz", float),
    "bandwidth_hz": _FieldSpec("bandwidth_hz", float),
    "noise_density_dbm_hz": _FieldSpec("noise_density_dbm_hz", float),
    "irs_pos_m": _FieldSpec("irs_pos", _parse_triple, _dump_position),
    "bs_pos_m": _FieldSpec("bs_pos", _parse_triple, _dump_position),
    "user_true_pos_m": _FieldSpec("user_true_pos", _parse_triple, _dump_position),
    "user_est_pos_m": _FieldSpec("user_est_pos", _parse_triple, _dump_position),
    "bs_nz": _FieldSpec("bs_geom", _parse_int, lambda g: g.n_z),
    "bs_ny": _FieldSpec("bs_geom", _parse_int, lambda g: g.n_y),
    "irs_nz": _FieldSpec("irs_geom", _parse_int, lambda g: g.n_z),
    "irs_ny": _FieldSpec("irs_geom", _parse_int, lambda g: g.n_y),
    "spacing_wl": _FieldSpec("irs_geom", float, lambda g: g.spacing),
    "upsilon_m": _FieldSpec("upsilon_m", float),
    "target_rate_bps_hz": _FieldSpec("target_rate", float),
    "path_count": _FieldSpec("path_count", _parse_int),
    "nlos_offset_db": _FieldSpec("nlos_offset_db", float),
    "seed": _FieldSpec("seed", _parse_int),
    "profile": _FieldSpec("profile", str),
    "trials": _FieldSpec("trials", _parse_int),
    "eval_mode": _FieldSpec("eval_mode", str),
    "epsilon": _FieldSpec("epsilon", float),
    "max_outer_iters": _FieldSpec("max_outer_iters", _parse_int),
    "randomization_count": _FieldSpec("randomization_count", _parse_int),
    "power_scale_cap": _FieldSpec("power_scale_cap", float),
    "sdp_tol": _FieldSpec("sdp_tol", float),
    "workers": _FieldSpec("workers", _parse_int),
}

_POSITION_KEYS = ("irs_pos_m", "bs_pos_m", "user_true_pos_m", "user_est_pos_m")
_GEOMETRY_KEYS = ("bs_nz", "bs_ny", "irs_nz", "irs_ny", "spacing_wl")


def scenario_from_dict(values: Dict[str, Any], lines: Optional[Dict[str, int]] = None,
                       allow_paper: bool = False) -> Scenario:
    """
    Build a Scenario from scenario-file keys (already parsed to Python values).

    Profile values fill in whatever the dictionary leaves out; lines maps keys
    to source line numbers for diagnostics.
    """
    lines = lines or {}
    values = dict(values)
    profile = values.get("profile", "desk")
    if profile not in PROFILES:
        raise ScenarioError(f"unknown profile '{profile}'", lines.get("profile"), "profile")
    if profile == "paper" and not allow_paper:
        raise ScenarioError("profile 'paper' (N = 16, M = 100) requires --paper-profile",
                            lines.get("profile"), "profile")
    for key, value in PROFILES[profile].items():
        values.setdefault(key, value)

    kwargs: Dict[str, Any] = {"profile": profile}

    def build(keys, factory, *args):
        try:
            return factory(*args)
        except DomainError as exc:
            key = next((k for k in keys if k in lines), keys[0])
            raise ScenarioError(str(exc), lines.get(key), key) from exc

    for key in _POSITION_KEYS:
        if key in values:
            kwargs[FIELDS[key].attr] = build((key,), Position3D, *values[key])
    spacing = values.get("spacing_wl", 0.5)
    kwargs["bs_geom"] = build(("bs_nz", "bs_ny", "spacing_wl"), UraGeometry,
                              values["bs_nz"], values["bs_ny"], spacing)
    kwargs["irs_geom"] = build(("irs_nz", "irs_ny", "spacing_wl"), UraGeometry,
                               values["irs_nz"], values["irs_ny"], spacing)

    for key, value in values.items():
        if key in _POSITION_KEYS or key in _GEOMETRY_KEYS or key == "profile":
            continue
        if key not in FIELDS:
            raise ScenarioError("unknown key", lines.get(key), key)
        kwargs[FIELDS[key].attr] = value
    try:
        return Scenario(**kwargs)
    except ScenarioError as exc:
        raise ScenarioError(exc.message, lines.get(exc.field), exc.field) from exc


def parse_scenario_text(text: str, allow_paper: bool = False) -> Scenario:
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value'", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FIELDS:
            raise ScenarioError("unknown key", lineno, key)
        if key in values:
            raise ScenarioError(f"duplicate key (first set on line {lines[key]})", lineno, key)
        try:
            values[key] = FIELDS[key].parse(value)
        except ValueError as exc:
            raise ScenarioError(f"cannot parse '{value}': {exc}", lineno, key) from exc
        lines[key] = lineno
    return scenario_from_dict(values, lines, allow_paper)


def load_scenario(path: str, allow_paper: bool = False) -> Scenario:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    scen = parse_scenario_text(text, allow_paper)
    logger.info(f"scenario {path}: profile {scen.profile}, N = {scen.bs_geom.size}, M = {scen.irs_geom.size}, "
                f"upsilon = {scen.upsilon_m} m, r = {scen.target_rate} bits/s/Hz")
    return scen


def with_overrides(scen: Scenario, **overrides) -> Scenario:
    """Replace fields, skipping None values (unset CLI flags)."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(scen, **changes) if changes else scen


def resolve_seed(scen: Scenario) -> Scenario:
    """Pin a fresh entropy value as the seed so the run can be replayed."""
    if scen.seed is not None:
        return scen
    entropy = int(np.random.SeedSequence().entropy % (2 ** 63))
    logger.info(f"no seed given, using {entropy}")
    return dataclasses.replace(scen, seed=entropy)


def seed_streams(scen: Scenario) -> Dict[str, np.random.SeedSequence]:
    """Independent child streams for channel synthesis, optimization and evaluation."""
    channel, optimizer, evaluation = np.random.SeedSequence(scen.seed).spawn(3)
    return {"channel": channel, "optimizer": optimizer, "evaluation": evaluation}


def build_context(scen: Scenario) -> Tuple[DesignContext, ChannelSet]:
    """Synthesize the scenario's channels and package what the optimizer needs."""
    channels = generate_channels(scen, seed_streams(scen)["channel"])
    sens = error_sensitivity(scen.irs_pos, scen.estimated_user, scen.irs_geom)
    ctx = DesignContext(g_hat=channels.g_hat, G=channels.G, sens=sens, ball=scen.ball,
                        noise_power=scen.noise_power)
    return ctx, channels
