import numpy as np
import pytest
from conftest import example1

from qgreen.greenfn import GreenImage, compute_constants
from qgreen.measure import StieltjesMeasure
from qgreen.verify import check_f_hypotheses, check_green_properties, check_residuals


def zero(t, x=None):
    return np.zeros_like(np.asarray(t, float))


class TestResiduals:
    def test_zero_solution(self):
        spec = example1(1, f=lambda t, x: zero(t))
        r = check_residuals(lambda t: 0.0, spec)
        assert r.ode_residual_sup == 0.0 and r.bc0_residual == 0.0
        assert r.bc_mixed_residual == 0.0 and max(r.bc_der_residuals) == 0.0

    @pytest.mark.parametrize("case", [1, 2])
    @pytest.mark.parametrize("power", [0, 1, 2])
    def test_green_image_reconstruction(self, case, power):
        spec = example1(case)
        y = lambda t, k=power: np.asarray(t, float) ** k
        r = check_residuals(GreenImage(y, spec), spec, source=lambda t: float(y(t)))
        assert r.within(ode_tol=1e-5, bc_tol=1e-6)
        assert r.bc0_residual < 1e-13 and r.bc_mixed_residual < 1e-12

    def test_wrong_function_has_large_residual(self):
        spec = example1(1)
        r = check_residuals(lambda t: 1.0 + t, spec, source=lambda t: 1.0)
        assert not r.within()

    def test_serializable(self):
        spec = example1(1, f=lambda t, x: zero(t))
        d = check_residuals(lambda t: 0.0, spec).to_dict()
        assert set(d) >= {"ode_residual_sup", "bc0_residual", "bc_der_residuals", "bc_mixed_residual"}


class TestGreenProperties:
    def test_example1_margins(self):
        for case in (1, 2):
            rep = check_green_properties(example1(case), grid_n=30)
            for key, margin in rep.margins.items():
                if key != "ii.upper":
                    assert margin >= -1e-10, key

    def test_stated_upper_bound_counterexample(self):
        # the stated bound with every zeta replaced by 1 on the right fails on Example 1
        rep = check_green_properties(example1(1), grid_n=30)
        assert rep.margins["ii.upper"] < -0.5
        assert "ii.upper" in rep.failures and not rep.passed

    def test_grid_of_one(self):
        rep = check_green_properties(example1(1), grid_n=1)
        assert all(np.isfinite(v) for v in rep.margins.values())

    def test_degenerate_two_point(self):
        spec = example1(1, gammas=(0.0, 0.0), betas=(0.0, 0.0), mu=0.0)
        rep = check_green_properties(spec, grid_n=20)
        assert all(np.isfinite(v) for v in rep.margins.values())
        assert rep.to_dict()["grid_n"] == 20


class TestFHypotheses:
    def test_example1_passes(self):
        rep = check_f_hypotheses(example1(1))
        assert rep.passed, rep.violations

    def test_negative_f(self):
        spec = example1(1, f=lambda t, x: zero(t) - 1.0)
        rep = check_f_hypotheses(spec)
        assert not rep.passed and rep.violations["f_nonnegative"] > 0

    def test_exponential_breaks_H4(self):
        spec = example1(1, f=lambda t, x: np.exp(np.asarray(x, float)) + 0 * t, y_ell=lambda l: np.sqrt(l))
        rep = check_f_hypotheses(spec)
        assert rep.violations["H4_f(t,lx)>=y(l)f(t,x)"] > 0

    def test_decreasing_f(self):
        spec = example1(1, f=lambda t, x: 1.0 / (1.0 + np.asarray(x, float)) + 0 * t)
        rep = check_f_hypotheses(spec)
        assert rep.violations["f_nondecreasing_in_x"] > 0

    def test_bad_y(self):
        spec = example1(1, y_ell=lambda l: np.asarray(l, float))
        rep = check_f_hypotheses(spec)
        assert rep.violations["y_in_(l,1)"] > 0

    def test_scalar_only_callables(self):
        import math

        spec = example1(1, f=lambda t, x: math.sqrt(1 + x), h=lambda t: 1.0, y_ell=lambda l: math.sqrt(l))
        rep = check_f_hypotheses(spec, n_samples=10, x_max=2.0)
        assert rep.passed and rep.x_max == 2.0
