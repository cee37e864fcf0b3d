"""
Second-order model of the worst-case received power and its S-Procedure form.

For d = diag(g_hat) diag(xi) G w, the received power under a position error is
|e(Delta)^T d|^2 = sum_{m,n} d_m d_n^* exp((f_bar_m - f_bar_n)^T Delta_bar), with
f_bar_m = j*pi*d_hat*f_m and Delta_bar = Delta / d_hat. Its exact Maclaurin
expansion to second order is

    q(Delta_bar) = q0 + phi^T Delta_bar + 1/2 Delta_bar^T Phi Delta_bar,

q0 = |1^T d|^2, phi_k = sum Re{d_m d_n^* [f_bar_m - f_bar_n]_k},
Phi_sl = sum Re{d_m d_n^* [f_bar_m - f_bar_n]_s [f_bar_m - f_bar_n]_l}.

Written as Q + 2 phi^T x + x^T Phi x the linear and quadratic terms would be
double the true expansion; the 1/2 factors here match the exact derivatives
and the LMI block carries the same factors.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy import linalg, optimize

from channel_model import ChannelB2I, PhaseShifts, ReflectChannel
from exceptions import DomainError
from location_model import ErrorSensitivity, LocationError, UncertaintyBall

logger = logging.getLogger(__name__)

# (s, l) pairs with s <= l, in storage order of LiftedForms.a_mats
A_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))

TRS_TOL = 1e-10


@dataclass(frozen=True)
class CompositeVector:
    """Per-element reflected contributions d = diag(g_hat) diag(xi) G w."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=complex)
        if d.ndim != 1 or not np.all(np.isfinite(d)):
            raise DomainError("composite vector must be a finite 1-D array")
        object.__setattr__(self, "d", d)


def composite_vector(g_hat: ReflectChannel, xi: PhaseShifts, G: ChannelB2I, w: np.ndarray) -> CompositeVector:
    if not (g_hat.size == xi.size == G.irs_size) or G.bs_size != np.shape(w)[0]:
        raise DomainError("dimension mismatch while forming the composite vector")
    return CompositeVector(g_hat.vector * xi.xi * (G.matrix @ w))


@dataclass(frozen=True)
class RobustQuadratic:
    q0: float
    phi: np.ndarray
    phi_mat: np.ndarray
    d_hat: float
    radius: float

    @property
    def rho(self) -> float:
        """Ball radius in normalized units, Upsilon / d_hat."""
        return self.radius / self.d_hat

    def value(self, delta_bar: np.ndarray) -> Union[float, np.ndarray]:
        """q(Delta_bar); accepts a single 3-vector or a (K, 3) batch."""
        x = np.asarray(delta_bar, dtype=float)
        linear = x @ self.phi
        quadratic = 0.5 * np.einsum("...i,ij,...j->...", x, self.phi_mat, x)
        return self.q0 + linear + quadratic


def quadratic_value(rq: RobustQuadratic, delta_bar: np.ndarray) -> Union[float, np.ndarray]:
    return rq.value(delta_bar)


def _as_delta(delta) -> np.ndarray:
    if isinstance(delta, LocationError):
        return delta.delta
    return np.asarray(delta, dtype=float)


def taylor_quadratic(d: CompositeVector, sens: ErrorSensitivity, ball: UncertaintyBall) -> RobustQuadratic:
    """Second-order expansion of |e^T d|^2 around Delta = 0."""
    vec = d.d if isinstance(d, CompositeVector) else np.asarray(d, dtype=complex)
    if vec.shape[0] != sens.size:
        raise DomainError(f"composite vector has {vec.shape[0]} entries, sensitivity has {sens.size} rows")
    p = sens.scaled
    total = vec.sum()
    first = p.T @ vec
    second = p.T @ (vec[:, None] * p)
    phi = -2.0 * np.imag(first * np.conj(total))
    phi_mat = 2.0 * np.real(np.outer(first, np.conj(first))) - 2.0 * np.real(second * np.conj(total))
    phi_mat = 0.5 * (phi_mat + phi_mat.T)
    return RobustQuadratic(q0=float(np.abs(total) ** 2), phi=phi, phi_mat=phi_mat,
                           d_hat=sens.d_hat, radius=ball.radius)


def taylor_terms_pairwise(d: CompositeVector, sens: ErrorSensitivity) -> Tuple[np.ndarray, np.ndarray]:
    """
    phi and Phi from the raw pairwise sums, before taking real parts.

    O(M^2); the imaginary parts cancel between the (m, n) and (n, m) terms.
    """
    vec = d.d
    f_bar = 1j * sens.scaled
    diff = f_bar[:, None, :] - f_bar[None, :, :]
    weight = vec[:, None] * np.conj(vec)[None, :]
    phi = np.einsum("mn,mnk->k", weight, diff)
    phi_mat = np.einsum("mn,mns,mnl->sl", weight, diff, diff)
    return phi, phi_mat


def exact_received_power(d: CompositeVector, sens: ErrorSensitivity, delta) -> Union[float, np.ndarray]:
    """|e(Delta)^T d|^2 evaluated directly; delta may be a (K, 3) batch in meters."""
    x = _as_delta(delta)
    e = np.exp(1j * np.pi * (x @ sens.f.T))
    power = np.abs(e @ d.d) ** 2
    return float(power) if np.ndim(power) == 0 else power


def _trust_region_step(g: np.ndarray, H: np.ndarray, rho: float) -> np.ndarray:
    """Global minimizer of g^T x + 1/2 x^T H x over ||x|| <= rho."""
    if rho == 0.0:
        return np.zeros_like(g)
    # solve for y = x / rho on the unit ball, with the data brought to O(1)
    g_unit = rho * g
    H_unit = rho ** 2 * H
    scale = max(float(np.max(np.abs(H_unit))), float(np.linalg.norm(g_unit)))
    if scale == 0.0:
        return np.zeros_like(g)
    lam, V = linalg.eigh(H_unit / scale)
    gt = V.T @ (g_unit / scale)
    g_norm = float(np.linalg.norm(gt))
    eig_tol = 1e-12

    if lam[0] > eig_tol:
        y = -V @ (gt / lam)
        if np.linalg.norm(y) <= 1.0:
            return rho * y

    lower = max(0.0, -lam[0])
    low_space = lam <= lam[0] + eig_tol
    g_low = float(np.linalg.norm(gt[low_space]))

    if g_low <= 1e-12:
        # hard case: g has no component along the leftmost eigenspace
        shifted = lam[~low_space] - lam[0]
        y_h = -V[:, ~low_space] @ (gt[~low_space] / shifted)
        h_norm = float(np.linalg.norm(y_h))
        if h_norm <= 1.0:
            tau = np.sqrt(max(1.0 - h_norm ** 2, 0.0))
            return rho * (y_h + tau * V[:, 0])

    def step_norm(shift):
        return float(np.linalg.norm(gt / (lam + shift)))

    hi = lower + g_norm
    if lam[0] > eig_tol:
        lo = 0.0
    else:
        lo = lower + max(g_low, np.finfo(float).tiny) / 2.0
        for _ in range(200):
            if step_norm(lo) > 1.0:
                break
            lo = lower + 0.1 * (lo - lower)
    secular = lambda shift: 1.0 - 1.0 / step_norm(shift)
    if secular(hi) >= 0.0:
        shift = hi
    elif secular(lo) <= 0.0:
        shift = lo
    else:
        shift = optimize.brentq(secular, lo, hi, xtol=1e-15, maxiter=500)
    return -rho * (V @ (gt / (lam + shift)))


def min_quadratic_over_ball(rq: RobustQuadratic) -> Tuple[float, np.ndarray]:
    """Exact minimum of q over ||Delta_bar|| <= Upsilon / d_hat and the normalized argmin."""
    if rq.radius == 0.0:
        return float(rq.q0), np.zeros(3)
    x = _trust_region_step(rq.phi, rq.phi_mat, rq.rho)
    norm = np.linalg.norm(x)
    if norm > rq.rho:
        x *= rq.rho / norm
    return float(rq.value(x)), x


def _fibonacci_sphere(count: int) -> np.ndarray:
    k = np.arange(count) + 0.5
    polar = np.arccos(1.0 - 2.0 * k / count)
    azimuth = np.pi * (1.0 + np.sqrt(5.0)) * k
    return np.column_stack([np.cos(azimuth) * np.sin(polar),
                            np.sin(azimuth) * np.sin(polar),
                            np.cos(polar)])


def exact_worst_case_power(d: CompositeVector, sens: ErrorSensitivity, ball: UncertaintyBall,
                           directions: int = 96, polish: int = 4) -> Tuple[float, np.ndarray]:
    """
    Minimum of the exact |e(Delta)^T d|^2 over the ball, by shell sampling and local polishing.

    Not a certificate: the exact power is nonconvex in Delta. Starts include the
    trust-region argmin of the Taylor model. Returns (value, Delta in meters).
    """
    if ball.radius == 0.0:
        return float(np.abs(d.d.sum()) ** 2), np.zeros(3)
    rho = ball.radius / sens.d_hat
    _, x_model = min_quadratic_over_ball(taylor_quadratic(d, sens, ball))
    shell = _fibonacci_sphere(directions)
    starts = np.vstack([np.zeros(3), x_model, rho * shell, 0.5 * rho * shell])
    values = exact_received_power(d, sens, starts * sens.d_hat)
    order = np.argsort(values)[:polish]

    norm_scale = max(float(np.sum(np.abs(d.d))) ** 2, np.finfo(float).tiny)
    objective = lambda x: exact_received_power(d, sens, x * sens.d_hat) / norm_scale
    ball_constraint = {"type": "ineq", "fun": lambda x: rho ** 2 - x @ x, "jac": lambda x: -2.0 * x}
    best_value, best_x = float(values[order[0]]) / norm_scale, starts[order[0]]
    for idx in order:
        result = optimize.minimize(objective, starts[idx], method="SLSQP", constraints=[ball_constraint],
                                   options={"ftol": 1e-14, "maxiter": 200})
        x = result.x
        norm = np.linalg.norm(x)
        if norm > rho:
            x = x * rho / norm
        value = objective(x)
        if value < best_value:
            best_value, best_x = float(value), x
    return best_value * norm_scale, best_x * sens.d_hat


@dataclass(frozen=True)
class LiftedForms:
    """
    (Q, phi, Phi) as real-linear functions of a Hermitian matrix variable X.

    Each quantity equals Re tr(H X) for the stored Hermitian coefficient H:
    X = W_bar (N x N) for kind "w", X = Xi (M x M) for kind "xi".
    d_mats[q][m, n] = p_mq - p_nq and a_mats[k] = d_mats[s] * d_mats[l] for
    (s, l) = A_INDEX[k], where f_bar_m = j p_m; the complex weights are
    j * d_mats[q] and j^2 * a_mats[k] respectively.
    """

    kind: str
    t_or_pi: np.ndarray = field(repr=False)
    d_mats: np.ndarray = field(repr=False)
    a_mats: np.ndarray = field(repr=False)
    q_coef: np.ndarray = field(repr=False)
    phi_coefs: np.ndarray = field(repr=False)
    phi_mat_coefs: np.ndarray = field(repr=False)
    d_hat: float

    @property
    def var_dim(self) -> int:
        return self.q_coef.shape[0]

    def evaluate(self, X: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        trace = lambda H: float(np.real(np.sum(H * X.T)))
        q0 = trace(self.q_coef)
        phi = np.array([trace(H) for H in self.phi_coefs])
        phi_mat = np.array([[trace(self.phi_mat_coefs[s, l]) for l in range(3)] for s in range(3)])
        return q0, phi, phi_mat

    def to_quadratic(self, X: np.ndarray, ball: UncertaintyBall) -> RobustQuadratic:
        q0, phi, phi_mat = self.evaluate(X)
        return RobustQuadratic(q0=q0, phi=phi, phi_mat=phi_mat, d_hat=self.d_hat, radius=ball.radius)

    def scaled(self, factor: float) -> "LiftedForms":
        return LiftedForms(kind=self.kind, t_or_pi=self.t_or_pi, d_mats=self.d_mats, a_mats=self.a_mats,
                           q_coef=factor * self.q_coef, phi_coefs=factor * self.phi_coefs,
                           phi_mat_coefs=factor * self.phi_mat_coefs, d_hat=self.d_hat)

    def coefficient(self, name: str) -> np.ndarray:
        """Coefficient by name: 'q', 'phi0'..'phi2', 'Phi00'..'Phi22'."""
        if name == "q":
            return self.q_coef
        if name.startswith("phi"):
            return self.phi_coefs[int(name[3])]
        return self.phi_mat_coefs[int(name[3]), int(name[4])]


def _difference_mats(sens: ErrorSensitivity) -> Tuple[np.ndarray, np.ndarray]:
    p = sens.scaled
    d_mats = p.T[:, :, None] - p.T[:, None, :]
    a_mats = np.stack([d_mats[s] * d_mats[l] for s, l in A_INDEX])
    return d_mats, a_mats


def _hermitian(H: np.ndarray) -> np.ndarray:
    return 0.5 * (H + H.conj().T)


def _lift(kind: str, sens: ErrorSensitivity, t_or_pi: np.ndarray, congruence) -> LiftedForms:
    d_mats, a_mats = _difference_mats(sens)
    size = sens.size
    q_coef = _hermitian(congruence(np.ones((size, size))))
    phi_coefs = np.stack([_hermitian(congruence(1j * d_mats[q])) for q in range(3)])
    var_dim = q_coef.shape[0]
    phi_mat_coefs = np.empty((3, 3, var_dim, var_dim), dtype=complex)
    for k, (s, l) in enumerate(A_INDEX):
        H = _hermitian(congruence(-a_mats[k]))
        phi_mat_coefs[s, l] = H
        phi_mat_coefs[l, s] = H
    return LiftedForms(kind=kind, t_or_pi=t_or_pi, d_mats=d_mats, a_mats=a_mats, q_coef=q_coef,
                       phi_coefs=phi_coefs, phi_mat_coefs=phi_mat_coefs, d_hat=sens.d_hat)


def lift_for_w(xi: PhaseShifts, g_hat: ReflectChannel, G: ChannelB2I, sens: ErrorSensitivity) -> LiftedForms:
    """Coefficients in W_bar = w w^H, with T = diag(g_hat) diag(xi) G."""
    if not (g_hat.size == xi.size == G.irs_size == sens.size):
        raise DomainError("dimension mismatch between g_hat, xi, G and the sensitivity rows")
    T = (g_hat.vector * xi.xi)[:, None] * G.matrix
    # weight K on R = T X T^H becomes T^H K^T T on X
    return _lift("w", sens, T, lambda K: T.conj().T @ K.T @ T)


def lift_for_xi(w: np.ndarray, g_hat: ReflectChannel, G: ChannelB2I, sens: ErrorSensitivity) -> LiftedForms:
    """Coefficients in Xi = xi xi^H, with Pi = diag(diag(g_hat) G w)."""
    w = np.asarray(w, dtype=complex)
    if not (g_hat.size == G.irs_size == sens.size) or G.bs_size != w.shape[0]:
        raise DomainError("dimension mismatch between g_hat, G, w and the sensitivity rows")
    c = g_hat.vector * (G.matrix @ w)
    outer = np.conj(c)[:, None] * c[None, :]
    return _lift("xi", sens, np.diag(c), lambda K: K.T * outer)


@dataclass(frozen=True)
class LmiBlock:
    """
    S-Procedure block [[Q - gamma - mu - v, phi^T/2], [phi/2, Phi/2 + mu (d_hat/Upsilon)^2 I]].

    PSD with some mu >= 0 certifies q(Delta_bar) >= gamma + v on the ball.
    """

    source: Union[RobustQuadratic, LiftedForms]
    gamma: float
    rho: float
    with_slack: bool = False

    @property
    def mu_weight(self) -> float:
        return 1.0 / self.rho ** 2

    def evaluate(self, matrix: Optional[np.ndarray] = None, mu: float = 0.0, v: float = 0.0) -> np.ndarray:
        if isinstance(self.source, LiftedForms):
            if matrix is None:
                raise DomainError("a matrix value is required to evaluate a lifted LMI block")
            q0, phi, phi_mat = self.source.evaluate(matrix)
        else:
            q0, phi, phi_mat = self.source.q0, self.source.phi, self.source.phi_mat
        slack = v if self.with_slack else 0.0
        block = np.zeros((4, 4))
        block[0, 0] = q0 - self.gamma - mu - slack
        block[0, 1:] = 0.5 * phi
        block[1:, 0] = 0.5 * phi
        block[1:, 1:] = 0.5 * phi_mat + mu * self.mu_weight * np.eye(3)
        return block

    def affine_parts(self, multiplier: str = "mu") -> Tuple[np.ndarray, Dict[Tuple[int, int], np.ndarray],
                                                           Dict[str, np.ndarray]]:
        """
        Split the block into constant, matrix-variable and scalar-variable parts.

        multiplier="nu" uses the substitution mu = nu * rho^2, so nu enters as
        -rho^2 in the corner and +I below; better conditioned for small balls.
        """
        constant = np.zeros((4, 4))
        matrix_coefs: Dict[Tuple[int, int], np.ndarray] = {}
        if isinstance(self.source, LiftedForms):
            lifted = self.source
            matrix_coefs[(0, 0)] = lifted.q_coef
            for k in range(3):
                matrix_coefs[(0, k + 1)] = 0.5 * lifted.phi_coefs[k]
            for s, l in A_INDEX:
                matrix_coefs[(s + 1, l + 1)] = 0.5 * lifted.phi_mat_coefs[s, l]
        else:
            constant[0, 0] = self.source.q0
            constant[0, 1:] = constant[1:, 0] = 0.5 * self.source.phi
            constant[1:, 1:] = 0.5 * self.source.phi_mat
        constant[0, 0] -= self.gamma

        corner = np.zeros((4, 4))
        corner[0, 0] = 1.0
        lower = np.zeros((4, 4))
        lower[1:, 1:] = np.eye(3)
        if multiplier == "mu":
            scalars = {"mu": -corner + self.mu_weight * lower}
        elif multiplier == "nu":
            scalars = {"nu": -self.rho ** 2 * corner + lower}
        else:
            raise DomainError(f"unknown multiplier convention '{multiplier}'")
        if self.with_slack:
            scalars["v"] = -corner
        return constant, matrix_coefs, scalars


def assemble_lmi(lifted_or_rq: Union[RobustQuadratic, LiftedForms], gamma: float, ball: UncertaintyBall,
                 d_hat: float, with_slack: bool = False) -> LmiBlock:
    """S-Procedure LMI for q(Delta_bar) >= gamma on ||Delta_bar|| <= Upsilon / d_hat."""
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if ball.radius == 0.0:
        raise DomainError("zero uncertainty radius makes the LMI degenerate; use the pointwise constraint q0 >= gamma")
    return LmiBlock(source=lifted_or_rq, gamma=gamma, rho=ball.radius / d_hat, with_slack=with_slack)


def lmi_certificate(rq: RobustQuadratic, gamma: float, ball: UncertaintyBall) -> Tuple[float, float]:
    """
    Best multiplier mu for the numeric block and the block's smallest eigenvalue there.

    lambda_min of an affine matrix function is concave, so a bounded scalar
    search over mu in [0, max(q0 - gamma, 0)] finds the maximum.
    """
    block = assemble_lmi(rq, gamma, ball, rq.d_hat)
    margin = lambda mu: float(np.linalg.eigvalsh(block.evaluate(mu=mu))[0])
    upper = max(rq.q0 - gamma, 0.0)
    if upper == 0.0:
        return 0.0, margin(0.0)
    result = optimize.minimize_scalar(lambda mu: -margin(mu), bounds=(0.0, upper), method="bounded",
                                      options={"xatol": 1e-12 * upper})
    best_mu = float(result.x)
    for candidate in (0.0, upper):
        if margin(candidate) > margin(best_mu):
            best_mu = candidate
    return best_mu, margin(best_mu)
