import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgreen.errors import DomainError
from qgreen.measure import (
    StieltjesMeasure,
    measure_is_zero,
    quadrature_rule,
    stieltjes_integrate,
    total_mass,
)

coef = st.floats(-3, 3)


def test_examples():
    assert stieltjes_integrate(lambda t: np.ones_like(t), StieltjesMeasure((1.0,))) == pytest.approx(1.0, abs=1e-14)
    case2 = StieltjesMeasure((-1.0, 2.0))
    assert stieltjes_integrate(lambda t: t + 0.5, case2) == pytest.approx(1 / 6, abs=1e-14)
    atom = StieltjesMeasure((), ((0.5, 2.0),))
    assert stieltjes_integrate(lambda t: np.ones_like(t), atom) == pytest.approx(2.0, abs=1e-15)


def test_is_zero():
    assert measure_is_zero(StieltjesMeasure())
    assert not measure_is_zero(StieltjesMeasure((-1.0, 2.0)))
    assert measure_is_zero(StieltjesMeasure((), ((0.3, 0.0),)))
    assert stieltjes_integrate(lambda t: t, StieltjesMeasure()) == 0.0


def test_validation():
    with pytest.raises(DomainError):
        StieltjesMeasure((), ((1.5, 1.0),))
    with pytest.raises(DomainError):
        StieltjesMeasure((), ((0.5, 1.0), (0.5, 2.0)))


def test_total_mass():
    m = StieltjesMeasure((-1.0, 2.0), ((0.25, 0.5),))
    assert total_mass(m) == pytest.approx(0.5, abs=1e-15)


def test_scalar_only_integrand_falls_back():
    def g(t):
        return float(t) ** 2  # rejects arrays

    assert stieltjes_integrate(g, StieltjesMeasure((1.0,))) == pytest.approx(1 / 3, abs=1e-14)


def test_kink_splitting():
    c = 0.37
    exact = (c**2 + (1 - c) ** 2) / 2
    m = StieltjesMeasure((1.0,))
    split = stieltjes_integrate(lambda t: np.abs(t - c), m, kinks=[c])
    assert split == pytest.approx(exact, abs=1e-12)
    unsplit = stieltjes_integrate(lambda t: np.abs(t - c), m)
    assert abs(unsplit - exact) > 1e-8


def test_quadrature_rule_layout():
    xs, ws = quadrature_rule(StieltjesMeasure((1.0,), ((0.5, 2.0), (0.2, 0.0))), kinks=[0.3], order=8)
    assert xs.size == 17  # two Gauss pieces plus the nonzero atom
    assert ws.sum() == pytest.approx(3.0, abs=1e-14)


@settings(max_examples=50)
@given(st.lists(coef, min_size=1, max_size=6), st.lists(coef, min_size=1, max_size=15))
def test_polynomial_exactness(dens, gco):
    m = StieltjesMeasure(tuple(dens))
    exact = sum(c * d / (i + j + 1) for i, c in enumerate(gco) for j, d in enumerate(dens))
    got = stieltjes_integrate(lambda t: np.polyval(gco[::-1], t), m)
    assert got == pytest.approx(exact, abs=1e-12)


@settings(max_examples=50)
@given(coef, coef, st.lists(coef, min_size=1, max_size=3), st.lists(coef, min_size=1, max_size=3))
def test_linearity(a, b, d1, d2):
    m1 = StieltjesMeasure(tuple(d1), ((0.3, 1.0),))
    m2 = StieltjesMeasure(tuple(d2), ((0.7, -0.5),))
    f = lambda t: np.exp(t)
    g = lambda t: np.cos(2 * t)
    lhs = stieltjes_integrate(lambda t: a * f(t) + b * g(t), m1)
    rhs = a * stieltjes_integrate(f, m1) + b * stieltjes_integrate(g, m1)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    sum_m = stieltjes_integrate(f, m1 + m2)
    assert sum_m == pytest.approx(stieltjes_integrate(f, m1) + stieltjes_integrate(f, m2), abs=1e-12)
    assert stieltjes_integrate(f, m1.scaled(a)) == pytest.approx(a * stieltjes_integrate(f, m1), abs=1e-12)
