import numpy as np
import pytest
from numpy.testing import assert_allclose

from exceptions import DomainError
from location_model import UncertaintyBall
import sdp_interface
from robust_quadratic import RobustQuadratic, assemble_lmi
from sdp_interface import (
    INFEASIBLE,
    NUMERICAL_FAILURE,
    OPTIMAL,
    LinearConstraint,
    LmiMap,
    SdpProblem,
    SdpSolution,
    VerificationReport,
    dump_problem,
    load_problem,
    solve,
    verify,
)


def _corner(n, value=1.0):
    H = np.zeros((n, n), dtype=complex)
    H[0, 0] = value
    return H


def _trace_problem(n=3):
    """min trace(X) + mu  s.t.  X >= 0, X11 >= 1, mu >= 0."""
    return SdpProblem(
        matrix_var_dim=n,
        scalar_vars=("mu",),
        sense="min",
        objective_matrix=np.eye(n),
        objective_scalars={"mu": 1.0},
        linear_constraints=(
            LinearConstraint("X11 >= 1", "ge", 1.0, _corner(n)),
            LinearConstraint("mu >= 0", "ge", 0.0, scalar_coefs={"mu": 1.0}),
        ),
    )


def _phase_problem():
    """max v  s.t.  diag(Xi) = 1, Xi >= 0, Re tr(C Xi) - v >= 0 as a 1 x 1 LMI."""
    C = np.array([[1.0, 1.0 + 1.0j], [1.0 - 1.0j, 0.0]])
    cap = LmiMap("cap", constant=np.zeros((1, 1)), matrix_coefs={(0, 0): C},
                 scalar_coefs={"v": -np.ones((1, 1))})
    return SdpProblem(matrix_var_dim=2, scalar_vars=("v",), sense="max", objective_scalars={"v": 1.0},
                      psd_constraints=(cap,), unit_diagonal=True)


class TestSolve:

    def test_trace_toy(self):
        sol = solve(_trace_problem())
        assert sol.is_optimal
        assert_allclose(sol.objective_value, 1.0, atol=1e-6)
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        assert_allclose(sol.matrix_value, expected, atol=1e-6)
        assert sol.certified_gap <= 1e-6

    def test_unit_diagonal_toy(self):
        sol = solve(_phase_problem())
        assert sol.is_optimal
        assert_allclose(sol.scalar_values["v"], 1.0 + 2.0 * np.sqrt(2.0), atol=1e-6)
        assert_allclose(np.real(np.diag(sol.matrix_value)), 1.0, atol=1e-6)

    def test_infeasible(self):
        # [-1 - mu] >= 0 with mu >= 0 has no solution
        lmi = LmiMap("negative corner", constant=-np.ones((1, 1)), scalar_coefs={"mu": -np.ones((1, 1))})
        problem = SdpProblem(matrix_var_dim=2, scalar_vars=("mu",), sense="min", objective_matrix=np.eye(2),
                             psd_constraints=(lmi,),
                             linear_constraints=(LinearConstraint("mu >= 0", "ge", 0.0, scalar_coefs={"mu": 1.0}),))
        sol = solve(problem)
        assert sol.status == INFEASIBLE
        assert sol.matrix_value is None
        assert not sol.is_optimal

    def test_bad_tolerance(self):
        with pytest.raises(DomainError):
            solve(_trace_problem(), tol=0.0)

    @pytest.mark.parametrize("violation, status", [(1e-5, OPTIMAL), (1e-2, NUMERICAL_FAILURE)])
    def test_optimum_outside_tolerance_is_not_certified(self, monkeypatch, violation, status):
        def loose(problem, sol, tol=1e-8):
            return VerificationReport(violations={"X11 >= 1": violation})

        monkeypatch.setattr(sdp_interface, "verify", loose)
        sol = solve(_trace_problem(), tol=1e-6, solvers=("CLARABEL",))
        assert sol.status == status
        if status == OPTIMAL:
            assert_allclose(sol.certified_gap, violation)
        else:
            assert sol.matrix_value is None


class TestVerify:

    def test_optimal_solution_passes(self):
        problem = _trace_problem()
        report = verify(problem, solve(problem), 1e-6)
        assert report.passed(1e-6)
        assert set(report.violations) == {"X >= 0", "X11 >= 1", "mu >= 0"}

    def test_corrupted_multiplier_is_flagged(self):
        problem = _trace_problem()
        sol = solve(problem)
        corrupted = SdpSolution(sol.matrix_value, {"mu": -0.5}, sol.objective_value, sol.status)
        report = verify(problem, corrupted)
        assert report.worst_constraint == "mu >= 0"
        assert_allclose(report.max_violation, 0.5, atol=1e-6)
        assert not report.passed(1e-6)

    def test_lmi_margin_matches_block(self):
        rq = RobustQuadratic(q0=4.0, phi=np.array([0.3, -0.2, 0.1]), phi_mat=-np.eye(3), d_hat=2.0, radius=1.0)
        block = assemble_lmi(rq, 1.0, UncertaintyBall(1.0), rq.d_hat)
        constant, _, scalars = block.affine_parts("mu")
        lmi = LmiMap("robust", constant=constant, scalar_coefs=scalars)
        assert_allclose(lmi.evaluate(None, {"mu": 0.7}), block.evaluate(mu=0.7), atol=1e-10)
        problem = SdpProblem(matrix_var_dim=1, scalar_vars=("mu",), sense="min", psd_constraints=(lmi,),
                             var_is_hermitian_psd=False)
        report = verify(problem, SdpSolution(None, {"mu": 0.7}, 0.0, "optimal"))
        assert_allclose(report.psd_margins["robust"], np.linalg.eigvalsh(block.evaluate(mu=0.7))[0], atol=1e-10)


class TestProblemDescription:

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            SdpProblem(matrix_var_dim=3, scalar_vars=(), sense="min", objective_matrix=np.eye(2))

    def test_undeclared_scalar(self):
        with pytest.raises(DomainError):
            SdpProblem(matrix_var_dim=2, scalar_vars=(), sense="min", objective_scalars={"v": 1.0})

    def test_bad_sense_and_kind(self):
        with pytest.raises(DomainError):
            SdpProblem(matrix_var_dim=2, scalar_vars=(), sense="maximize")
        with pytest.raises(DomainError):
            LinearConstraint("x", "le", 0.0)

    def test_lower_triangle_index(self):
        with pytest.raises(DomainError):
            LmiMap("bad", constant=np.zeros((2, 2)), matrix_coefs={(1, 0): np.eye(2)})

    def test_dump_and_load(self, tmp_path):
        problem = _phase_problem()
        path = tmp_path / "phase.json"
        dump_problem(problem, str(path))
        loaded = load_problem(str(path))
        assert loaded.scalar_vars == ("v",)
        assert loaded.unit_diagonal
        assert_allclose(loaded.psd_constraints[0].matrix_coefs[(0, 0)], problem.psd_constraints[0].matrix_coefs[(0, 0)])
        assert_allclose(solve(loaded).objective_value, 1.0 + 2.0 * np.sqrt(2.0), atol=1e-6)

    def test_load_rejects_other_files(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(DomainError):
            load_problem(str(path))
