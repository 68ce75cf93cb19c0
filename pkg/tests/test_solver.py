import math
import warnings

import numpy as np
import pytest
from conftest import example1

from qgreen.errors import MonotonicityViolation, NegativeInput
from qgreen.greenfn import compute_constants
from qgreen.solver import (
    GreenOperator,
    QGridFunction,
    SolutionEvaluator,
    apply_T,
    cone_seed,
    lambda_sweep,
    solve,
)


@pytest.fixture(scope="module")
def case1():
    spec = example1(1)
    op = GreenOperator(spec)
    return spec, op, solve(spec, op=op, residuals=True)


@pytest.fixture(scope="module")
def case2():
    spec = example1(2)
    return spec, solve(spec)


class TestOperator:
    def test_cone_seed(self):
        spec = example1(1)
        p = cone_seed(spec)
        assert p.zero_value == pytest.approx(1 / 3, abs=1e-14)
        assert p.base_values[0] == pytest.approx(1.0, abs=1e-14)

    def test_zero_source_maps_to_zero(self):
        spec = example1(1, f=lambda t, x: np.zeros_like(np.asarray(t * x, float)))
        out = apply_T(cone_seed(spec), spec)
        assert out.sup_norm() == 0.0 and out.zero_value == 0.0

    def test_negative_input_rejected(self):
        spec = example1(1)
        p = cone_seed(spec)
        with pytest.raises(NegativeInput):
            apply_T(p * -1.0, spec)

    def test_T_is_monotone(self):
        # f is nondecreasing in x, so T u <= T v whenever u <= v
        spec = example1(2)
        op = GreenOperator(spec)
        p = cone_seed(spec, op=op)
        lo, hi = op.apply(p * 0.5, 1.0)[0], op.apply(p * 2.0, 1.0)[0]
        assert np.all(lo.values <= hi.values + 1e-15)

    def test_T_maps_into_cone(self):
        spec = example1(1)
        op = GreenOperator(spec)
        out = op.apply(cone_seed(spec, op=op), 1.0)[0]
        assert np.all(out.values > 0) and out.zero_value > 0

    def test_grid_contains_seed_lattices(self):
        spec = example1(2)
        op = GreenOperator(spec)
        nodes = op.grid.nodes
        assert nodes[0, 0] == 1.0
        assert np.allclose(nodes[op.idx_z, 0], spec.zetas)
        assert op.idx_quad.size == 32


class TestSolve:
    def test_x_independent_f_converges_in_two_steps(self):
        spec = example1(1, f=lambda t, x: np.ones_like(np.asarray(t * x, float)))
        r = solve(spec)
        assert r.converged and r.n_iters == 2
        assert r.sup_changes[-1] == 0.0 or r.sup_changes[-1] < 1e-15

    def test_zero_f(self):
        spec = example1(1, f=lambda t, x: np.zeros_like(np.asarray(t * x, float)))
        r = solve(spec, check_hypotheses=False)
        assert r.converged and r.norm == 0.0

    def test_example1_converges(self, case1):
        spec, op, r = case1
        assert r.converged and r.n_iters < 50
        assert r.fixed_point_residual < 10 * 1e-10
        assert r.norm == pytest.approx(0.438, abs=2e-3)

    def test_cone_certificate(self, case1, case2):
        for r in (case1[2], case2[1]):
            mu_hat, nu_hat = r.cone_certificate
            assert 0 < mu_hat <= nu_hat < math.inf

    def test_residuals(self, case1):
        res = case1[2].residuals
        assert res.within(ode_tol=1e-5, bc_tol=1e-6)

    @pytest.mark.parametrize("scale", [0.5, 3.0])
    def test_uniqueness_from_other_seeds(self, case1, scale):
        spec, op, r = case1
        other = solve(spec, x0=scale, op=op)
        assert (other.solution - r.solution).sup_norm() < 1e-9

    def test_seed_as_callable(self, case1):
        spec, op, r = case1
        other = solve(spec, x0=lambda t: 0.5 + 0.0 * np.asarray(t), op=op)
        assert (other.solution - r.solution).sup_norm() < 1e-9

    def test_evaluator_matches_grid(self, case1):
        spec, op, r = case1
        x = r.solution
        nodes = x.base_nodes[:12]
        assert np.max(np.abs(x.evaluator(nodes) - x.base_values[:12])) <= 1e-12
        assert x(0.0) == pytest.approx(x.zero_value, abs=1e-15)

    def test_evaluator_off_grid_is_fixed_point(self, case1):
        spec, op, r = case1
        x = r.solution
        t = 0.777
        cached = x.evaluator(t)
        ev = SolutionEvaluator(op, spec.lam, *op.apply(x, spec.lam)[1])
        assert ev(t) == pytest.approx(cached, abs=1e-12)

    def test_iterates_monotone_from_cone_seed(self, case1):
        r = case1[2]
        assert r.monotone is True
        x0, x1, _ = r.iterates_kept
        assert np.all(x0.values <= x1.values + 1e-14) or np.all(x1.values <= x0.values + 1e-14)

    def test_decay_is_fast(self, case1):
        ch = case1[2].sup_changes
        assert all(b < a for a, b in zip(ch, ch[1:]))
        ratios = [b / a for a, b in zip(ch, ch[1:]) if a > 0]
        assert max(ratios) < 0.05

    def test_summary_keys(self, case1):
        s = case1[2].summary()
        for k in ("lambda", "converged", "n_iters", "sup_norm", "cone_certificate", "residuals"):
            assert k in s


class TestSweep:
    def test_ordering(self):
        spec = example1(1)
        with warnings.catch_warnings():
            warnings.simplefilter("error", MonotonicityViolation)
            sw = lambda_sweep(spec, [0.25, 0.5, 1.0, 2.0])
        assert sw.monotone and not sw.violations
        assert all(b > a for a, b in zip(sw.norms, sw.norms[1:]))

    def test_small_lambda(self, case1):
        r = solve(example1(1, lam=1e-3))
        assert r.norm < case1[2].norm / 10

    def test_rejects_bad_lists(self):
        with pytest.raises(ValueError):
            lambda_sweep(example1(1), [2.0, 1.0])
        with pytest.raises(ValueError):
            lambda_sweep(example1(1), [0.0, 1.0])

    def test_single_lambda(self):
        sw = lambda_sweep(example1(1), [1.0])
        assert len(sw.reports) == 1 and sw.monotone

    def test_grid_function_arithmetic(self):
        spec = example1(1)
        p = cone_seed(spec)
        d = (p * 2.0) - p
        assert isinstance(d, QGridFunction)
        assert d.sup_norm() == pytest.approx(p.sup_norm(), rel=1e-15)
