"""
Robust joint design of the BS beamformer w and the IRS phase shifts xi.

Minimizes ||w||^2 subject to the Taylor-model received power staying above
gamma = (2^r - 1) sigma0^2 for every position error in the uncertainty ball.
Each outer iteration solves a relaxed w-step (trace minimization over W_bar),
recovers w by Gaussian randomization, then runs the phase feasibility step
(maximize the SINR residual v over Xi) and recovers xi the same way.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from channel_model import ChannelB2I, PhaseShifts, ReflectChannel, dbm
from exceptions import DomainError, OptimizerError, RandomizationError, SolverError
from location_model import ErrorSensitivity, SeedLike, UncertaintyBall
from robust_quadratic import (
    CompositeVector,
    assemble_lmi,
    exact_worst_case_power,
    lift_for_w,
    lift_for_xi,
    min_quadratic_over_ball,
    taylor_quadratic,
)
from sdp_interface import INFEASIBLE, LinearConstraint, LmiMap, SdpProblem, solve

logger = logging.getLogger(__name__)

# margin kept above gamma when a candidate is scaled onto the constraint
SCALE_SLACK = 1e-9
ACCEPT_SLACK = 1e-9


@dataclass(frozen=True)
class OptimizerConfig:
    target_rate_r: float
    epsilon: float = 1e-3
    max_outer_iters: int = 30
    randomization_count: int = 200
    power_scale_cap: float = 1e6
    rng_seed: SeedLike = None
    sdp_tol: float = 1e-8
    rate_tolerance: float = 0.1
    solvers: Tuple[str, ...] = ("CLARABEL", "SCS")

    def __post_init__(self):
        if not self.target_rate_r > 0:
            raise DomainError(f"target rate must be positive, got {self.target_rate_r}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.randomization_count < 1:
            raise DomainError(f"randomization_count must be >= 1, got {self.randomization_count}")
        if self.max_outer_iters < 1:
            raise DomainError(f"max_outer_iters must be >= 1, got {self.max_outer_iters}")
        if not self.power_scale_cap >= 1:
            raise DomainError(f"power_scale_cap must be >= 1, got {self.power_scale_cap}")


@dataclass(frozen=True)
class DesignContext:
    """Everything the optimizer knows: estimated channels, error model and noise."""

    g_hat: ReflectChannel
    G: ChannelB2I
    sens: ErrorSensitivity
    ball: UncertaintyBall
    noise_power: float

    def __post_init__(self):
        if not (self.g_hat.size == self.G.irs_size == self.sens.size):
            raise DomainError("g_hat, G and the sensitivity rows disagree on the IRS size")
        if not self.noise_power > 0:
            raise DomainError(f"noise power must be positive, got {self.noise_power}")

    @property
    def bs_size(self) -> int:
        return self.G.bs_size

    @property
    def irs_size(self) -> int:
        return self.G.irs_size

    def gamma(self, rate: float) -> float:
        return float((2.0 ** rate - 1.0) * self.noise_power)

    def t_matrix(self, xi: PhaseShifts) -> np.ndarray:
        """T = diag(g_hat) diag(xi) G."""
        return (self.g_hat.vector * xi.xi)[:, None] * self.G.matrix

    def composite(self, w: np.ndarray, xi: PhaseShifts) -> CompositeVector:
        return CompositeVector(self.g_hat.vector * xi.xi * (self.G.matrix @ w))

    def nominal_channel(self, xi: PhaseShifts) -> np.ndarray:
        return (self.g_hat.vector * xi.xi) @ self.G.matrix

    def worst_case(self, w: np.ndarray, xi: PhaseShifts) -> float:
        """Minimum of the Taylor-model received power over the ball."""
        value, _ = min_quadratic_over_ball(taylor_quadratic(self.composite(w, xi), self.sens, self.ball))
        return value

    def worst_case_rate(self, w: np.ndarray, xi: PhaseShifts) -> float:
        return float(np.log2(1.0 + max(self.worst_case(w, xi), 0.0) / self.noise_power))

    def exact_worst_case_rate(self, w: np.ndarray, xi: PhaseShifts) -> float:
        value, _ = exact_worst_case_power(self.composite(w, xi), self.sens, self.ball)
        return float(np.log2(1.0 + max(value, 0.0) / self.noise_power))


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    power_w: float
    sdr_bound_w: float
    v: float
    margin: float
    accepted_w: bool
    accepted_xi: bool

    @property
    def power_dbm(self) -> float:
        return dbm(self.power_w)


@dataclass
class DesignSolution:
    w: np.ndarray
    xi: PhaseShifts
    power: float
    mu: float
    worst_case_rate: float
    iterations: int
    trace: List[IterationRecord] = field(default_factory=list)
    exact_worst_case_rate: float = float("nan")
    success: bool = False
    target_rate: float = float("nan")
    sdr_bound: float = float("nan")
    converged: bool = False


def _reference_power(T: np.ndarray, gamma: float) -> float:
    """Non-robust matched-filter power gamma / ||T^H 1||^2."""
    gain = float(np.linalg.norm(T.conj().T @ np.ones(T.shape[0])) ** 2)
    if gain <= np.finfo(float).tiny:
        raise DomainError("zero composite channel")
    return gamma / gain


def build_w_problem(xi: PhaseShifts, ctx: DesignContext, cfg: OptimizerConfig) -> Tuple[SdpProblem, float]:
    """
    Relaxed w-step in normalized units: W_bar = scale * X with scale = gamma / ||T^H 1||^2.

    The LMI is divided by gamma and its multiplier is nu = mu / (gamma rho^2).
    Returns (problem, scale).
    """
    gamma = ctx.gamma(cfg.target_rate_r)
    lifted = lift_for_w(xi, ctx.g_hat, ctx.G, ctx.sens)
    scale = _reference_power(lifted.t_or_pi, gamma)
    normalized = lifted.scaled(scale / gamma)
    n = ctx.bs_size

    if ctx.ball.radius == 0.0:
        return SdpProblem(
            matrix_var_dim=n, scalar_vars=(), sense="min", objective_matrix=np.eye(n),
            linear_constraints=(LinearConstraint("q0 >= gamma", "ge", 1.0, normalized.q_coef),),
        ), scale

    block = assemble_lmi(normalized, 1.0, ctx.ball, ctx.sens.d_hat)
    constant, matrix_coefs, scalar_coefs = block.affine_parts(multiplier="nu")
    problem = SdpProblem(
        matrix_var_dim=n,
        scalar_vars=("nu",),
        sense="min",
        objective_matrix=np.eye(n),
        psd_constraints=(LmiMap("robust_rate", constant, matrix_coefs, scalar_coefs),),
        linear_constraints=(LinearConstraint("nu >= 0", "ge", 0.0, scalar_coefs={"nu": 1.0}),),
    )
    return problem, scale


def solve_w_subproblem(xi: PhaseShifts, ctx: DesignContext, cfg: OptimizerConfig) -> Tuple[np.ndarray, float]:
    """Relaxed power minimization for fixed xi; returns (W_bar, mu)."""
    problem, scale = build_w_problem(xi, ctx, cfg)
    sol = solve(problem, tol=cfg.sdp_tol, solvers=cfg.solvers)
    if not sol.is_optimal:
        raise SolverError(f"w-step SDP returned {sol.status}", sol.status)
    gamma = ctx.gamma(cfg.target_rate_r)
    rho = ctx.ball.radius / ctx.sens.d_hat
    mu = gamma * sol.scalar_values.get("nu", 0.0) * rho ** 2
    W_bar = scale * sol.matrix_value
    logger.debug(f"w-step: trace {np.real(np.trace(W_bar)):.4e} W, mu {mu:.3e}, residual {sol.certified_gap:.1e}")
    return W_bar, max(mu, 0.0)


def _factor(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    lam, U = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    return np.clip(lam, 0.0, None), U


def _gaussian_draws(lam: np.ndarray, U: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Rows U Lambda^(1/2) r_k with r_k ~ CN(0, I)."""
    r = (rng.standard_normal((count, lam.size)) + 1j * rng.standard_normal((count, lam.size))) / np.sqrt(2.0)
    return (r * np.sqrt(lam)) @ U.T


def _generator(rng: SeedLike) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def randomize_w(W_bar: np.ndarray, xi: PhaseShifts, ctx: DesignContext, cfg: OptimizerConfig,
                rng: SeedLike = None) -> np.ndarray:
    """
    Recover a beamformer from the relaxed W_bar.

    Candidates are the principal eigenvector and randomization_count Gaussian
    draws. The worst-case power is homogeneous of degree 2 in w, so every
    candidate is scaled exactly onto gamma; the cheapest one within
    power_scale_cap times the matched-filter power wins.
    """
    rng = _generator(rng if rng is not None else cfg.rng_seed)
    gamma = ctx.gamma(cfg.target_rate_r)
    lam, U = _factor(W_bar)
    if lam[-1] <= 0.0:
        raise DomainError("relaxed beamforming matrix is zero")
    candidates = np.vstack([np.sqrt(lam[-1]) * U[:, -1], _gaussian_draws(lam, U, cfg.randomization_count, rng)])

    power_cap = cfg.power_scale_cap * _reference_power(ctx.t_matrix(xi), gamma)
    best_w, best_power, best_margin, feasible = None, np.inf, -np.inf, 0
    for w in candidates:
        norm2 = float(np.real(np.vdot(w, w)))
        if norm2 == 0.0:
            continue
        worst = ctx.worst_case(w, xi)
        best_margin = max(best_margin, worst * power_cap / norm2 / gamma - 1.0)
        if worst <= 0.0:
            continue
        power = norm2 * gamma * (1.0 + SCALE_SLACK) / worst
        if power > power_cap:
            continue
        feasible += 1
        if power < best_power:
            best_w, best_power = w * np.sqrt(power / norm2), power
    logger.debug(f"w randomization: {feasible}/{len(candidates)} candidates feasible within the power cap")
    if best_w is None:
        raise RandomizationError("randomization failed", best_margin)
    return best_w


def build_xi_problem(w: np.ndarray, ctx: DesignContext, cfg: OptimizerConfig) -> SdpProblem:
    """Phase feasibility step with the LMI divided by gamma; v is in units of gamma."""
    w = np.asarray(w, dtype=complex)
    if not np.any(w):
        raise DomainError("beamformer must be nonzero")
    gamma = ctx.gamma(cfg.target_rate_r)
    normalized = lift_for_xi(w, ctx.g_hat, ctx.G, ctx.sens).scaled(1.0 / gamma)
    m = ctx.irs_size
    v_nonneg = LinearConstraint("v >= 0", "ge", 0.0, scalar_coefs={"v": 1.0})

    if ctx.ball.radius == 0.0:
        return SdpProblem(
            matrix_var_dim=m, scalar_vars=("v",), sense="max", objective_scalars={"v": 1.0},
            linear_constraints=(LinearConstraint("q0 - v >= gamma", "ge", 1.0, normalized.q_coef, {"v": -1.0}),
                                v_nonneg),
            unit_diagonal=True,
        )

    block = assemble_lmi(normalized, 1.0, ctx.ball, ctx.sens.d_hat, with_slack=True)
    constant, matrix_coefs, scalar_coefs = block.affine_parts(multiplier="nu")
    return SdpProblem(
        matrix_var_dim=m,
        scalar_vars=("nu", "v"),
        sense="max",
        objective_scalars={"v": 1.0},
        psd_constraints=(LmiMap("robust_rate_residual", constant, matrix_coefs, scalar_coefs),),
        linear_constraints=(LinearConstraint("nu >= 0", "ge", 0.0, scalar_coefs={"nu": 1.0}), v_nonneg),
        unit_diagonal=True,
    )


def solve_xi_subproblem(w: np.ndarray, ctx: DesignContext,
                        cfg: OptimizerConfig) -> Tuple[Optional[np.ndarray], float, float]:
    """
    Maximize the SINR residual v over Xi for fixed w; returns (Xi, mu, v) with v in watts.

    An infeasible step returns (None, 0, -inf); the caller keeps its phases.
    """
    problem = build_xi_problem(w, ctx, cfg)
    sol = solve(problem, tol=cfg.sdp_tol, solvers=cfg.solvers)
    if sol.status == INFEASIBLE:
        logger.debug("xi-step infeasible at v = 0")
        return None, 0.0, -np.inf
    if not sol.is_optimal:
        raise SolverError(f"xi-step SDP returned {sol.status}", sol.status)
    gamma = ctx.gamma(cfg.target_rate_r)
    rho = ctx.ball.radius / ctx.sens.d_hat
    mu = gamma * sol.scalar_values.get("nu", 0.0) * rho ** 2
    v = gamma * sol.scalar_values["v"]
    return sol.matrix_value, max(mu, 0.0), v


def randomize_xi(Xi: np.ndarray, w: np.ndarray, ctx: DesignContext, cfg: OptimizerConfig,
                 rng: SeedLike = None) -> Tuple[PhaseShifts, float]:
    """Unit-modulus candidates from Xi; returns the one with the largest worst-case margin and that margin."""
    rng = _generator(rng if rng is not None else cfg.rng_seed)
    gamma = ctx.gamma(cfg.target_rate_r)
    lam, U = _factor(Xi)
    candidates = np.vstack([U[:, -1], _gaussian_draws(lam, U, cfg.randomization_count, rng)])
    best_xi, best_margin = None, -np.inf
    for values in candidates:
        xi = PhaseShifts.project(values)
        margin = ctx.worst_case(w, xi) - gamma
        if margin > best_margin:
            best_xi, best_margin = xi, margin
    logger.debug(f"xi randomization: best margin {best_margin / gamma:+.3e} gamma")
    return best_xi, best_margin


def _tighten(w: np.ndarray, xi: PhaseShifts, ctx: DesignContext, gamma: float) -> np.ndarray:
    """Scale w down until the worst-case constraint is tight; never scales up."""
    worst = ctx.worst_case(w, xi)
    factor = gamma * (1.0 + SCALE_SLACK) / worst if worst > 0 else 1.0
    return w * np.sqrt(factor) if factor < 1.0 else w


def initialize(ctx: DesignContext, cfg: OptimizerConfig) -> Tuple[np.ndarray, PhaseShifts]:
    """
    Phase-aligned start: w_mrt matched to the all-ones-xi channel, xi aligned to
    diag(g_hat) G w_mrt, then w_mrt scaled onto the worst-case constraint.
    """
    gamma = ctx.gamma(cfg.target_rate_r)
    h_ones = ctx.nominal_channel(PhaseShifts.ones(ctx.irs_size))
    if not np.any(np.abs(h_ones) > 0):
        raise DomainError("zero composite channel")
    w_mrt = np.conj(h_ones) / np.linalg.norm(h_ones)
    xi = PhaseShifts.project(np.conj(ctx.g_hat.vector * (ctx.G.matrix @ w_mrt)))

    worst = ctx.worst_case(w_mrt, xi)
    power_cap = cfg.power_scale_cap * _reference_power(ctx.t_matrix(xi), gamma)
    if worst > 0:
        power = gamma * (1.0 + SCALE_SLACK) / worst
        if power <= power_cap:
            return w_mrt * np.sqrt(power), xi

    logger.warning("phase-aligned start is not worst-case feasible; starting from the relaxed w-step")
    W_bar, _ = solve_w_subproblem(xi, ctx, cfg)
    return randomize_w(W_bar, xi, ctx, cfg, cfg.rng_seed), xi


def alternate(ctx: DesignContext, cfg: OptimizerConfig) -> DesignSolution:
    """
    Alternating optimization.

    Each iteration after the first runs the phase step on the current w, then
    the w-step on the current xi. Iterates are accepted only if they do not
    raise the power, so the trace is non-increasing; the loop stops when the
    fractional decrease of ||w||^2 falls below epsilon.
    """
    gamma = ctx.gamma(cfg.target_rate_r)
    rng = np.random.default_rng(cfg.rng_seed)
    trace: List[IterationRecord] = []
    try:
        w, xi = initialize(ctx, cfg)
    except (DomainError, SolverError, RandomizationError) as exc:
        raise OptimizerError(f"initialization infeasible: {exc}", 0, trace) from exc

    power = float(np.real(np.vdot(w, w)))
    trace.append(IterationRecord(0, power, float("nan"), float("nan"), ctx.worst_case(w, xi) - gamma, True, True))
    logger.info(f"init: power {power:.4e} W ({dbm(power):.2f} dBm)")

    mu, sdr_bound, converged, iteration = 0.0, float("nan"), False, 0
    for iteration in range(1, cfg.max_outer_iters + 1):
        previous = power
        v, accepted_xi = float("nan"), False
        try:
            if iteration > 1:
                Xi, _, v = solve_xi_subproblem(w, ctx, cfg)
                if np.isfinite(v):
                    candidate, margin = randomize_xi(Xi, w, ctx, cfg, rng)
                    if margin >= ctx.worst_case(w, xi) - gamma:
                        xi, accepted_xi = candidate, True
                        w = _tighten(w, xi, ctx, gamma)
                        power = float(np.real(np.vdot(w, w)))
                    else:
                        logger.warning(f"iteration {iteration}: randomized phases lower the margin, keeping previous xi")

            W_bar, mu = solve_w_subproblem(xi, ctx, cfg)
            sdr_bound = float(np.real(np.trace(W_bar)))
            accepted_w = False
            try:
                w_new = randomize_w(W_bar, xi, ctx, cfg, rng)
                power_new = float(np.real(np.vdot(w_new, w_new)))
                if power_new <= power * (1.0 + ACCEPT_SLACK):
                    w, power, accepted_w = w_new, power_new, True
                else:
                    logger.warning(f"iteration {iteration}: randomized w needs {power_new:.4e} W, keeping {power:.4e} W")
            except RandomizationError as exc:
                logger.warning(f"iteration {iteration}: {exc}; keeping previous w")
        except (DomainError, SolverError) as exc:
            raise OptimizerError(str(exc), iteration, trace) from exc

        margin = ctx.worst_case(w, xi) - gamma
        trace.append(IterationRecord(iteration, power, sdr_bound, v, margin, accepted_w, accepted_xi))
        logger.info(f"iteration {iteration}: power {power:.4e} W ({dbm(power):.2f} dBm), "
                    f"SDR bound {sdr_bound:.4e} W, v {v:.3e}, margin {margin / gamma:+.2e} gamma")

        if (previous - power) / previous < cfg.epsilon:
            converged = True
            break

    rate = ctx.worst_case_rate(w, xi)
    exact_rate = ctx.exact_worst_case_rate(w, xi)
    success = exact_rate >= cfg.target_rate_r - cfg.rate_tolerance
    if not success:
        logger.warning(f"exact worst-case rate {exact_rate:.3f} bits/s/Hz misses target {cfg.target_rate_r}")
    return DesignSolution(
        w=w, xi=xi, power=power, mu=mu, worst_case_rate=rate, iterations=iteration, trace=trace,
        exact_worst_case_rate=exact_rate, success=success, target_rate=cfg.target_rate_r,
        sdr_bound=sdr_bound, converged=converged,
    )
