"""Invariant suite run by ``cli.py selftest``: quick numeric checks of every math layer."""

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from array_geometry import EffectiveAngles, UraGeometry, flat_to_grid, grid_to_flat, steering_vector
from channel_model import dbm, noise_power_from_scenario
from location_model import Position3D, UncertaintyBall, error_sensitivity
from robust_quadratic import (
    CompositeVector,
    RobustQuadratic,
    exact_received_power,
    lmi_certificate,
    min_quadratic_over_ball,
    taylor_quadratic,
)
from sdp_interface import LinearConstraint, SdpProblem, solve

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_instance(rng: np.random.Generator, n_z: int = 2, n_y: int = 4):
    geom = UraGeometry(n_z, n_y)
    user = Position3D(*(np.array([20.0, 20.0, -20.0]) + rng.uniform(-5.0, 5.0, size=3)))
    sens = error_sensitivity(Position3D(0.0, 0.0, 0.0), user, geom)
    d = CompositeVector(rng.standard_normal(geom.size) + 1j * rng.standard_normal(geom.size))
    return d, sens


def check_steering(rng) -> Tuple[bool, str]:
    geom = UraGeometry(3, 5)
    worst = 0.0
    for _ in range(20):
        angles = EffectiveAngles(*rng.uniform(-1.0, 1.0, size=2))
        a = steering_vector(geom, angles)
        worst = max(worst, np.max(np.abs(np.abs(a) - 1.0)),
                    np.max(np.abs(steering_vector(geom, -angles) - np.conj(a))))
    return worst <= 1e-12, f"max deviation {worst:.1e}"


def check_index_bijection(rng) -> Tuple[bool, str]:
    n_z, n_y = 4, 3
    ok = all(grid_to_flat(*flat_to_grid(i, n_z, n_y), n_z) == i for i in range(1, n_z * n_y + 1))
    return ok, f"{n_z * n_y} indices"


def check_noise_power(rng) -> Tuple[bool, str]:
    value = dbm(noise_power_from_scenario(-169.0, 1e8))
    return abs(value + 89.0) < 1e-9, f"{value:.6f} dBm"


def check_taylor_derivatives(rng) -> Tuple[bool, str]:
    worst = 0.0
    h = 1e-4
    eye = np.eye(3)
    for _ in range(10):
        d, sens = _random_instance(rng)
        rq = taylor_quadratic(d, sens, UncertaintyBall(1.0))
        power = lambda x: exact_received_power(d, sens, np.asarray(x) * sens.d_hat)
        grad = np.array([(power(h * e) - power(-h * e)) / (2 * h) for e in eye])
        hess = np.array([[(power(h * (a + b)) - power(h * (a - b)) - power(h * (b - a)) + power(-h * (a + b)))
                          / (4 * h * h) for b in eye] for a in eye])
        scale = max(rq.q0, 1e-12)
        worst = max(worst,
                    abs(power(np.zeros(3)) - rq.q0) / scale,
                    np.linalg.norm(grad - rq.phi) / max(np.linalg.norm(rq.phi), scale),
                    np.linalg.norm(hess - rq.phi_mat) / max(np.linalg.norm(rq.phi_mat), scale))
    return worst <= 1e-5, f"max relative error {worst:.1e}"


def check_taylor_remainder(rng) -> Tuple[bool, str]:
    ratios = []
    for _ in range(10):
        d, sens = _random_instance(rng)
        rq = taylor_quadratic(d, sens, UncertaintyBall(1.0))
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        t = 0.02 / np.max(np.linalg.norm(sens.scaled, axis=1))
        rem = [abs(rq.value(s * u) - exact_received_power(d, sens, s * u * sens.d_hat)) for s in (t, t / 2)]
        ratios.append(rem[0] / rem[1])
    ratios = np.array(ratios)
    return bool(np.all((ratios >= 6.0) & (ratios <= 10.0))), f"ratios in [{ratios.min():.2f}, {ratios.max():.2f}]"


def _grid_minimum(rq: RobustQuadratic, points: int, rng) -> float:
    u = rng.standard_normal((points, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    x = u * rq.rho * rng.random(points)[:, None] ** (1.0 / 3.0)
    shell = u * rq.rho
    return float(min(np.min(rq.value(x)), np.min(rq.value(shell))))


def check_trust_region(rng, points: int = 20000) -> Tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        A = rng.standard_normal((3, 3))
        rq = RobustQuadratic(q0=5.0, phi=rng.standard_normal(3), phi_mat=A + A.T, d_hat=1.0,
                             radius=float(rng.uniform(0.2, 2.0)))
        exact, x = min_quadratic_over_ball(rq)
        sampled = _grid_minimum(rq, points, rng)
        if np.linalg.norm(x) > rq.rho * (1 + 1e-9) or exact > sampled + 1e-9:
            return False, f"oracle above sampled minimum ({exact:.6f} > {sampled:.6f})"
        worst = max(worst, (sampled - exact) / max(abs(exact), 1.0))
    return worst <= 0.05, f"largest sampled gap {worst:.2e}"


def check_certificate_soundness(rng) -> Tuple[bool, str]:
    certified = 0
    for _ in range(30):
        A = rng.standard_normal((3, 3))
        rq = RobustQuadratic(q0=float(rng.uniform(2.0, 6.0)), phi=rng.standard_normal(3), phi_mat=A + A.T,
                             d_hat=1.0, radius=float(rng.uniform(0.1, 0.6)))
        gamma = float(rng.uniform(0.0, 2.0))
        _, margin = lmi_certificate(rq, gamma, UncertaintyBall(rq.radius))
        if margin >= 0.0:
            certified += 1
            value, _ = min_quadratic_over_ball(rq)
            if value < gamma - 1e-7:
                return False, f"certified block but minimum {value:.6f} < gamma {gamma:.6f}"
    return True, f"{certified} certified instances"


def check_sdp_backend(rng) -> Tuple[bool, str]:
    n = 3
    corner = np.zeros((n, n))
    corner[0, 0] = 1.0
    problem = SdpProblem(matrix_var_dim=n, scalar_vars=(), sense="min", objective_matrix=np.eye(n),
                         linear_constraints=(LinearConstraint("X11 >= 1", "ge", 1.0, corner),))
    sol = solve(problem)
    if not sol.is_optimal:
        return False, f"status {sol.status}"
    return abs(sol.objective_value - 1.0) <= 1e-6, f"objective {sol.objective_value:.8f} via {sol.solver}"


CHECKS: List[Tuple[str, Callable]] = [
    ("steering unit modulus and conjugate symmetry", check_steering),
    ("flat/grid index bijection", check_index_bijection),
    ("noise power at -169 dBm/Hz over 100 MHz", check_noise_power),
    ("Taylor model derivatives at zero error", check_taylor_derivatives),
    ("Taylor remainder is third order", check_taylor_remainder),
    ("trust-region oracle against sampling", check_trust_region),
    ("S-Procedure certificate soundness", check_certificate_soundness),
    ("SDP backend on an analytic toy problem", check_sdp_backend),
]


def run_selftest(seed: int = 0) -> List[CheckResult]:
    results = []
    for name, check in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            passed, detail = check(rng)
        except Exception as exc:  # a crashing check is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
        log = logger.info if passed else logger.error
        log(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return results
