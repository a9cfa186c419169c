import math

import numpy as np
import pytest

from rayflow.errors import DegenerateInputError
from rayflow.inner import SolverOptions
from rayflow.iterate import (
    IterationRow,
    IterationTrace,
    IterOptions,
    StopReason,
    check_monotonicity,
    iterate,
    rough_mu,
)
from rayflow.oracles import direct_rayleigh_min, hilbert_closed_form
from rayflow.problems import MatrixQuadratic, NeumannQuotient1D, PDirichlet1D, Steklov1D

TIGHT = IterOptions(rtol=1e-13, dtol=1e-10, max_iters=200, solver=SolverOptions(grad_tol=1e-12), keep_iterates=True)


class TestMatrixGroundTruth:
    def test_iterates_match_closed_form(self):
        sigmas = np.array([1.0, 2.0, 5.0])
        inst = MatrixQuadratic(np.diag(sigmas))
        trace, summary = iterate(inst, np.ones(3), TIGHT)
        assert summary.converged
        for k, u in enumerate(trace.iterates):
            expect = hilbert_closed_form(sigmas, np.ones(3), k=k)
            assert np.linalg.norm(u - expect) <= 1e-9 * np.linalg.norm(expect)
        assert summary.lambda_hat == pytest.approx(1.0, abs=1e-12)
        assert summary.mu_hat == pytest.approx(summary.lambda_hat, rel=1e-12)

    def test_limit_direction(self):
        inst = MatrixQuadratic(np.diag([1.0, 2.0, 5.0]))
        _, summary = iterate(inst, np.ones(3), TIGHT)
        w = summary.limit_vec.values
        assert np.linalg.norm(w / np.linalg.norm(w) - np.array([1.0, 0.0, 0.0])) <= 1e-8

    def test_restarting_from_minimizer_is_separable(self):
        # from an exact minimizer w the unique solution is u_k = mu^-k w
        inst = MatrixQuadratic(np.diag([1.0, 2.0, 5.0]))
        w = np.array([1.0, 0.0, 0.0])
        opts = IterOptions(rtol=None, dtol=None, max_iters=10, solver=SolverOptions(grad_tol=1e-13), keep_iterates=True)
        trace, summary = iterate(inst, w, opts)
        for k, u in enumerate(trace.iterates):
            np.testing.assert_allclose(u, w, rtol=0, atol=1e-10)


class TestCollapse:
    def test_second_eigenvector_collapses(self):
        inst = MatrixQuadratic(np.diag([1.0, 2.0, 5.0]))
        opts = IterOptions(rtol=None, dtol=None, max_iters=1100, solver=SolverOptions(grad_tol=1e-12))
        trace, summary = iterate(inst, np.array([0.0, 1.0, 0.0]), opts)
        assert summary.stop_reason is StopReason.COLLAPSED_TO_ZERO
        assert not summary.converged
        np.testing.assert_array_equal(summary.limit_vec.values, 0.0)
        # norms contract exactly at rate 1/2 (the sigma = 2 eigenray)
        for row in trace.rows[: summary.iters]:
            assert row.norm == pytest.approx(0.5**row.k, rel=1e-10)


class TestInvariants:
    def test_scaling_equivariance(self):
        inst = PDirichlet1D(3.0, 9)
        _, s1 = iterate(inst, np.ones(9), TIGHT)
        _, s2 = iterate(inst, 250.0 * np.ones(9), TIGHT)
        assert s1.lambda_hat == pytest.approx(s2.lambda_hat, rel=1e-10)
        np.testing.assert_allclose(
            s1.limit_vec.values / np.linalg.norm(s1.limit_vec.values),
            s2.limit_vec.values / np.linalg.norm(s2.limit_vec.values),
            atol=1e-9,
        )

    def test_monotonicity_empty_on_converged_runs(self):
        for inst in (MatrixQuadratic(np.diag([1.0, 4.0])), PDirichlet1D(1.5, 9), NeumannQuotient1D(3.0, 9)):
            u0 = np.linspace(-1, 1, inst.space.dim) if inst.kind == "neumann1d" else np.ones(inst.space.dim)
            trace, summary = iterate(inst, u0)
            assert summary.converged
            assert check_monotonicity(trace, summary.mu_hat) == []

    def test_estimator_consistency(self):
        inst = PDirichlet1D(2.0, 9)
        trace, summary = iterate(inst, np.ones(9), TIGHT)
        assert abs(summary.mu_hat - trace.rows[-1].ratio) <= 1e-6 * summary.mu_hat

    def test_lambda_approaches_from_above(self):
        inst = PDirichlet1D(2.0, 9)
        res = direct_rayleigh_min(inst)
        _, summary = iterate(inst, np.ones(9))
        assert summary.lambda_hat >= res.lambda_star * (1.0 - 1e-6)
        for rtol in (1e-4, 1e-6):
            _, s = iterate(inst, np.ones(9), IterOptions(rtol=rtol, dtol=None, rq_patience=1))
            assert s.lambda_hat >= res.lambda_star * (1.0 - 1e-6)


class TestCheckMonotonicity:
    def test_synthetic_rq_violation(self):
        trace = IterationTrace(
            rows=[
                IterationRow(0, 1.0, 1.0, 1.0, math.nan, 0, math.nan),
                IterationRow(1, 0.5, 0.5, 2.0, 2.0, 3, 1e-12),
            ]
        )
        violations = check_monotonicity(trace)
        assert len(violations) == 1
        assert violations[0].k == 1 and violations[0].quantity == "rq"

    def test_single_row_trace(self):
        trace = IterationTrace(rows=[IterationRow(0, 1.0, 1.0, 1.0, math.nan, 0, math.nan)])
        assert check_monotonicity(trace) == []

    def test_scaled_norm_check_needs_mu(self):
        rows = [
            IterationRow(0, 1.0, 1.0, 1.0, math.nan, 0, math.nan),
            IterationRow(1, 0.9, 0.5, 0.9, 1.11, 3, 1e-12),
        ]
        trace = IterationTrace(rows=rows)
        assert check_monotonicity(trace) == []  # ratio/rq fine
        bad = check_monotonicity(trace, mu_hat=2.0)  # 0.9 > 1.0/2
        assert [v.quantity for v in bad] == ["scaled_norm"]


class TestGuards:
    def test_zero_start_rejected(self):
        inst = PDirichlet1D(2.0, 5)
        with pytest.raises(DegenerateInputError):
            iterate(inst, np.zeros(5))

    def test_steklov_interior_start_rejected(self):
        # trace norm of an interior-supported vector is zero
        inst = Steklov1D(2.0, 6)
        u0 = np.zeros(6)
        u0[2] = 1.0
        with pytest.raises(DegenerateInputError):
            iterate(inst, u0)

    def test_rough_mu(self):
        inst = MatrixQuadratic(np.diag([1.0, 4.0]))
        mu = rough_mu(inst, np.ones(2))
        assert 1.0 <= mu <= 2.6
