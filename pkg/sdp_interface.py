"""
Semidefinite programs over one Hermitian matrix variable and a few named scalars.

Both alternating subproblems are written against this module: the w-step
minimizes trace(W_bar) and the phase step maximizes the SINR residual v. The
backend is cvxpy (complex variables go through its real symmetric embedding);
verify() recomputes every residual from the problem description alone.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np

from exceptions import DomainError

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

DEFAULT_TOL = 1e-8
DEFAULT_SOLVERS = ("CLARABEL", "SCS")
DUMP_FORMAT = "irs-sdp/1"


@dataclass(frozen=True)
class LmiMap:
    """
    Affine map into real symmetric k x k matrices.

    value(X, s) = constant + sum_{i<=j} Re tr(H_ij X) (E_ij + E_ji)/(1 + [i == j]) + sum_name s_name * S_name
    """

    name: str
    constant: np.ndarray
    matrix_coefs: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict, repr=False)
    scalar_coefs: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        k = self.size
        if self.constant.shape != (k, k):
            raise DomainError(f"LMI '{self.name}' constant must be square")
        for (i, j) in self.matrix_coefs:
            if not 0 <= i <= j < k:
                raise DomainError(f"LMI '{self.name}' coefficient index ({i}, {j}) outside the upper triangle")
        for name, coef in self.scalar_coefs.items():
            if coef.shape != (k, k):
                raise DomainError(f"LMI '{self.name}' coefficient of '{name}' has shape {coef.shape}")

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, X: Optional[np.ndarray], scalars: Dict[str, float]) -> np.ndarray:
        value = np.array(self.constant, dtype=float)
        for (i, j), H in self.matrix_coefs.items():
            entry = _trace_value(H, X)
            value[i, j] += entry
            if i != j:
                value[j, i] += entry
        for name, coef in self.scalar_coefs.items():
            value += scalars[name] * coef
        return value


@dataclass(frozen=True)
class LinearConstraint:
    """Re tr(H X) + sum c_name * s_name (== or >=) rhs."""

    name: str
    kind: str
    rhs: float = 0.0
    matrix_coef: Optional[np.ndarray] = field(default=None, repr=False)
    scalar_coefs: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("eq", "ge"):
            raise DomainError(f"constraint '{self.name}': kind must be 'eq' or 'ge', got '{self.kind}'")

    def lhs(self, X: Optional[np.ndarray], scalars: Dict[str, float]) -> float:
        value = _trace_value(self.matrix_coef, X) if self.matrix_coef is not None else 0.0
        return value + sum(c * scalars[name] for name, c in self.scalar_coefs.items())

    def violation(self, X: Optional[np.ndarray], scalars: Dict[str, float]) -> float:
        residual = self.lhs(X, scalars) - self.rhs
        return abs(residual) if self.kind == "eq" else max(0.0, -residual)


@dataclass(frozen=True)
class SdpProblem:
    matrix_var_dim: int
    scalar_vars: Tuple[str, ...]
    sense: str
    objective_matrix: Optional[np.ndarray] = field(default=None, repr=False)
    objective_scalars: Dict[str, float] = field(default_factory=dict)
    psd_constraints: Tuple[LmiMap, ...] = ()
    linear_constraints: Tuple[LinearConstraint, ...] = ()
    unit_diagonal: bool = False
    var_is_hermitian_psd: bool = True

    def __post_init__(self):
        if self.matrix_var_dim < 1:
            raise DomainError(f"matrix variable dimension must be positive, got {self.matrix_var_dim}")
        if self.sense not in ("min", "max"):
            raise DomainError(f"sense must be 'min' or 'max', got '{self.sense}'")
        n = self.matrix_var_dim
        known = set(self.scalar_vars)
        matrices = [self.objective_matrix] + [c.matrix_coef for c in self.linear_constraints]
        matrices += [H for lmi in self.psd_constraints for H in lmi.matrix_coefs.values()]
        for H in matrices:
            if H is not None and H.shape != (n, n):
                raise DomainError(f"coefficient of shape {H.shape} does not match the {n} x {n} variable")
        names = set(self.objective_scalars)
        for lmi in self.psd_constraints:
            names |= set(lmi.scalar_coefs)
        for con in self.linear_constraints:
            names |= set(con.scalar_coefs)
        if not names <= known:
            raise DomainError(f"undeclared scalar variables: {sorted(names - known)}")

    def objective_value(self, X: Optional[np.ndarray], scalars: Dict[str, float]) -> float:
        value = _trace_value(self.objective_matrix, X) if self.objective_matrix is not None else 0.0
        return value + sum(c * scalars[name] for name, c in self.objective_scalars.items())


@dataclass(frozen=True)
class SdpSolution:
    matrix_value: Optional[np.ndarray] = field(repr=False)
    scalar_values: Dict[str, float]
    objective_value: float
    status: str
    certified_gap: float = float("inf")
    solver: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class VerificationReport:
    violations: Dict[str, float] = field(default_factory=dict)
    psd_margins: Dict[str, float] = field(default_factory=dict)

    @property
    def max_violation(self) -> float:
        return max(self.violations.values(), default=0.0)

    @property
    def worst_constraint(self) -> str:
        if not self.violations:
            return ""
        return max(self.violations, key=self.violations.get)

    def passed(self, tol: float) -> bool:
        return self.max_violation <= tol


def _trace_value(H: np.ndarray, X: Optional[np.ndarray]) -> float:
    if X is None:
        raise DomainError("a matrix value is required for a constraint that involves the matrix variable")
    return float(np.real(np.sum(H * X.T)))


def _trace_expr(H: np.ndarray, X: cp.Variable):
    return cp.real(cp.sum(cp.multiply(H.T, X)))


def _scalar_expr(coefs: Dict[str, float], scalars: Dict[str, cp.Variable]):
    return sum((c * scalars[name] for name, c in coefs.items()), 0.0)


def _lmi_expr(lmi: LmiMap, X: cp.Variable, scalars: Dict[str, cp.Variable]):
    k = lmi.size
    block = cp.Constant(lmi.constant)
    for (i, j), H in lmi.matrix_coefs.items():
        unit = np.zeros((k, k))
        unit[i, j] = unit[j, i] = 1.0
        block = block + _trace_expr(H, X) * unit
    for name, coef in lmi.scalar_coefs.items():
        block = block + scalars[name] * coef
    return 0.5 * (block + block.T)


def _build(problem: SdpProblem):
    n = problem.matrix_var_dim
    X = cp.Variable((n, n), hermitian=True)
    scalars = {name: cp.Variable(name=name) for name in problem.scalar_vars}
    constraints = []
    if problem.var_is_hermitian_psd:
        constraints.append(X >> 0)
    if problem.unit_diagonal:
        constraints.append(cp.real(cp.diag(X)) == 1)
    for lmi in problem.psd_constraints:
        constraints.append(_lmi_expr(lmi, X, scalars) >> 0)
    for con in problem.linear_constraints:
        lhs = _scalar_expr(con.scalar_coefs, scalars)
        if con.matrix_coef is not None:
            lhs = lhs + _trace_expr(con.matrix_coef, X)
        constraints.append(lhs == con.rhs if con.kind == "eq" else lhs >= con.rhs)

    objective = _scalar_expr(problem.objective_scalars, scalars)
    if problem.objective_matrix is not None:
        objective = objective + _trace_expr(problem.objective_matrix, X)
    sense = cp.Minimize if problem.sense == "min" else cp.Maximize
    return cp.Problem(sense(objective), constraints), X, scalars


def _solver_options(solver: str, tol: float) -> dict:
    if solver == "CLARABEL":
        return {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol, "max_iter": 200}
    if solver == "SCS":
        return {"eps_abs": tol, "eps_rel": tol, "max_iters": 100_000}
    return {}


def _status_from(cvx_status: str) -> str:
    if cvx_status == cp.OPTIMAL:
        return OPTIMAL
    if cvx_status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return INFEASIBLE
    if cvx_status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        return UNBOUNDED
    return NUMERICAL_FAILURE


def _extract(problem: SdpProblem, X: cp.Variable, scalars: Dict[str, cp.Variable]):
    if X.value is None:
        return None, {}
    X_val = np.asarray(X.value, dtype=complex)
    X_val = 0.5 * (X_val + X_val.conj().T)
    values = {name: float(var.value) for name, var in scalars.items()}
    return X_val, values


def solve(problem: SdpProblem, tol: float = DEFAULT_TOL, solvers: Sequence[str] = DEFAULT_SOLVERS) -> SdpSolution:
    """
    Solve with the first available backend that reports an optimal point.

    Infeasible and unbounded problems come back as a status, never as an
    exception. A reported optimum must pass verify() at tol; one that does
    not, or an inaccurate optimum, is only a fallback when it passes at
    sqrt(tol) and no later backend certifies at tol.
    """
    if not tol > 0:
        raise DomainError(f"solver tolerance must be positive, got {tol}")
    installed = set(cp.installed_solvers())
    fallback: Optional[SdpSolution] = None
    for solver in solvers:
        if solver not in installed:
            logger.debug(f"SDP backend {solver} not installed, skipping")
            continue
        cvx_problem, X, scalars = _build(problem)
        try:
            cvx_problem.solve(solver=solver, **_solver_options(solver, tol))
        except cp.error.SolverError as exc:
            logger.warning(f"SDP backend {solver} failed: {exc}")
            continue
        status = _status_from(cvx_problem.status)
        logger.debug(f"SDP backend {solver}: {cvx_problem.status} (objective {cvx_problem.value})")
        X_val, values = _extract(problem, X, scalars)

        if status in (INFEASIBLE, UNBOUNDED):
            value = np.inf if (status == INFEASIBLE) == (problem.sense == "min") else -np.inf
            return SdpSolution(None, {}, value, status, solver=solver)
        if X_val is not None and (status == OPTIMAL or cvx_problem.status == cp.OPTIMAL_INACCURATE):
            candidate = SdpSolution(X_val, values, float(cvx_problem.value), NUMERICAL_FAILURE, solver=solver)
            report = verify(problem, candidate, tol)
            if status == OPTIMAL and report.passed(tol):
                return SdpSolution(X_val, values, candidate.objective_value, OPTIMAL, report.max_violation, solver)
            if report.passed(np.sqrt(tol)) and fallback is None:
                fallback = SdpSolution(X_val, values, candidate.objective_value, OPTIMAL,
                                       report.max_violation, solver)
            logger.warning(f"SDP backend {solver} returned {cvx_problem.status} outside tolerance "
                           f"(max violation {report.max_violation:.2e} on '{report.worst_constraint}')")

    if fallback is not None:
        return fallback
    logger.warning("no SDP backend produced an optimal point")
    return SdpSolution(None, {}, float("nan"), NUMERICAL_FAILURE)


def verify(problem: SdpProblem, sol: SdpSolution, tol: float = DEFAULT_TOL) -> VerificationReport:
    """Recompute residuals and PSD margins from the problem data; violations are reported, not raised."""
    report = VerificationReport()
    X = sol.matrix_value
    scalars = sol.scalar_values
    if X is not None and problem.var_is_hermitian_psd:
        margin = float(np.linalg.eigvalsh(0.5 * (X + X.conj().T))[0])
        report.psd_margins["X"] = margin
        report.violations["X >= 0"] = max(0.0, -margin)
    if X is not None and problem.unit_diagonal:
        report.violations["diag(X) == 1"] = float(np.max(np.abs(np.real(np.diag(X)) - 1.0)))
    for lmi in problem.psd_constraints:
        margin = float(np.linalg.eigvalsh(lmi.evaluate(X, scalars))[0])
        report.psd_margins[lmi.name] = margin
        report.violations[lmi.name] = max(0.0, -margin)
    for con in problem.linear_constraints:
        report.violations[con.name] = con.violation(X, scalars)
    if not report.passed(tol):
        logger.debug(f"verification: max violation {report.max_violation:.3e} on '{report.worst_constraint}'")
    return report


def _triplets(H: Optional[np.ndarray]) -> Optional[List[List[float]]]:
    if H is None:
        return None
    rows, cols = np.nonzero(H)
    return [[int(r), int(c), float(H[r, c].real), float(H[r, c].imag)] for r, c in zip(rows, cols)]


def _from_triplets(entries: Optional[Iterable], n: int) -> Optional[np.ndarray]:
    if entries is None:
        return None
    H = np.zeros((n, n), dtype=complex)
    for r, c, re, im in entries:
        H[int(r), int(c)] = re + 1j * im
    return H


def dump_problem(problem: SdpProblem, path: str) -> None:
    """Write the problem as self-describing JSON (dense constants, sparse complex triplets)."""
    doc = {
        "format": DUMP_FORMAT,
        "matrix_var_dim": problem.matrix_var_dim,
        "scalar_vars": list(problem.scalar_vars),
        "sense": problem.sense,
        "unit_diagonal": problem.unit_diagonal,
        "var_is_hermitian_psd": problem.var_is_hermitian_psd,
        "objective": {"matrix": _triplets(problem.objective_matrix), "scalars": problem.objective_scalars},
        "psd_constraints": [
            {
                "name": lmi.name,
                "constant": lmi.constant.tolist(),
                "matrix_coefs": [{"row": i, "col": j, "entries": _triplets(H)}
                                 for (i, j), H in lmi.matrix_coefs.items()],
                "scalar_coefs": {name: coef.tolist() for name, coef in lmi.scalar_coefs.items()},
            }
            for lmi in problem.psd_constraints
        ],
        "linear_constraints": [
            {"name": con.name, "kind": con.kind, "rhs": con.rhs,
             "matrix": _triplets(con.matrix_coef), "scalars": con.scalar_coefs}
            for con in problem.linear_constraints
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
    logger.info(f"SDP problem written to {path}")


def load_problem(path: str) -> SdpProblem:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != DUMP_FORMAT:
        raise DomainError(f"{path}: unsupported SDP dump format {doc.get('format')!r}")
    n = int(doc["matrix_var_dim"])
    lmis = tuple(
        LmiMap(
            name=item["name"],
            constant=np.array(item["constant"], dtype=float),
            matrix_coefs={(c["row"], c["col"]): _from_triplets(c["entries"], n) for c in item["matrix_coefs"]},
            scalar_coefs={name: np.array(coef, dtype=float) for name, coef in item["scalar_coefs"].items()},
        )
        for item in doc["psd_constraints"]
    )
    linear = tuple(
        LinearConstraint(name=item["name"], kind=item["kind"], rhs=float(item["rhs"]),
                         matrix_coef=_from_triplets(item["matrix"], n),
                         scalar_coefs={k: float(v) for k, v in item["scalars"].items()})
        for item in doc["linear_constraints"]
    )
    return SdpProblem(
        matrix_var_dim=n,
        scalar_vars=tuple(doc["scalar_vars"]),
        sense=doc["sense"],
        objective_matrix=_from_triplets(doc["objective"]["matrix"], n),
        objective_scalars={k: float(v) for k, v in doc["objective"]["scalars"].items()},
        psd_constraints=lmis,
        linear_constraints=linear,
        unit_diagonal=bool(doc["unit_diagonal"]),
        var_is_hermitian_psd=bool(doc["var_is_hermitian_psd"]),
    )
