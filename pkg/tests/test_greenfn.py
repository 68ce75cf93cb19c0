import math

import mpmath
import numpy as np
import pytest
from conftest import example1

from qgreen.errors import DomainError, HypothesisViolation
from qgreen.greenfn import (
    GreenEvaluator,
    GreenImage,
    ProblemSpec,
    compute_constants,
    eval_G,
    eval_H1,
    eval_H2,
    eval_H3,
    eval_phi,
    eval_psi1,
    eval_psi2,
    green_integral_kernel,
    require_hypotheses,
    validate_hypotheses,
)
from qgreen.measure import StieltjesMeasure
from qgreen.qkernel import QParams

mpmath.mp.dps = 30


def mp_qpow(a, b, alpha, q):
    """Independent fractional q-power via mpmath's q-Pochhammer."""
    a, b, q = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(q)
    if b > a:
        return mpmath.mpf(0)
    if b == a:
        return mpmath.mpf(0) if alpha > 0 else mpmath.mpf(1)
    return a**alpha * mpmath.qp(b / a, q) / mpmath.qp(q**alpha * b / a, q)


def mp_gamma(x, q):
    return mpmath.qgamma(x, q)


class TestSpec:
    def test_invariants(self):
        with pytest.raises(DomainError, match="gammas"):
            example1(gammas=(0.6, 0.6))
        with pytest.raises(DomainError, match="alpha"):
            example1(alpha=2.0)
        with pytest.raises(DomainError, match="zetas"):
            example1(zetas=(0.5, 1 / 3))
        with pytest.raises(DomainError, match="lambda"):
            example1(lam=0.0)
        with pytest.raises(DomainError, match="betas"):
            example1(betas=(-0.1, 0.2))

    def test_derived_properties(self):
        s = example1()
        assert s.n == 4 and s.q == pytest.approx(1 / 3)
        assert s.with_lambda(2.0).lam == 2.0


class TestConstants:
    def test_example1_case1(self):
        gc = compute_constants(example1(1))
        assert gc.delta == pytest.approx(7 / 15, abs=1e-12)
        assert gc.cshift == pytest.approx(0.5, abs=1e-12)
        assert gc.sigma == pytest.approx(1.5, abs=1e-12)
        assert gc.B == 0.0
        assert gc.rho == pytest.approx(49 / 12, abs=1e-12)

    def test_example1_case2(self):
        gc = compute_constants(example1(2))
        assert gc.B == pytest.approx(1 / 6, abs=1e-12)
        assert gc.rho == pytest.approx(43 / 12, abs=1e-12)
        assert gc.rho == pytest.approx(3.5833, abs=1e-4)
        assert gc.Phat == pytest.approx(1 + 3 * (1 / 6) / (43 / 12), abs=1e-12)

    def test_gamma_free(self):
        gc = compute_constants(example1(gammas=(0.0, 0.0)))
        assert (gc.delta, gc.cshift, gc.sigma) == (1.0, 0.0, 1.0)


def _prefactor(t, tau, s):
    q = s.q
    return (t + 0.5) * mp_qpow(1, q * tau, s.alpha - 2, q) / (2 * mp_gamma(s.alpha - 1, q))


class TestKernels:
    s = example1(1)
    gc = compute_constants(s)

    def test_H1_at_zero(self):
        tau = 0.4
        got = eval_H1(0.0, tau, self.s, self.gc)
        assert got == pytest.approx(float(_prefactor(0, tau, self.s)), rel=1e-12)

    def test_H1_continuous_at_kink(self):
        tau = 0.6
        t = self.s.q * tau
        below = eval_H1(t * (1 - 1e-12), tau, self.s, self.gc)
        above = eval_H1(t * (1 + 1e-12), tau, self.s, self.gc)
        assert below == pytest.approx(above, abs=1e-9)

    def test_H1_lower_branch(self):
        t, tau = 0.6, 0.3
        q = self.s.q
        expect = _prefactor(t, tau, self.s) - mp_qpow(t, q * tau, 2.5, q) / mp_gamma(3.5, q)
        assert eval_H1(t, tau, self.s, self.gc) == pytest.approx(float(expect), rel=1e-12)

    def test_H2_all_off(self):
        t, tau = 0.4, 0.99 / self.s.q * 0.999  # q tau just below 1, above both zetas
        assert eval_H2(t, tau, self.s, self.gc) == pytest.approx(float(_prefactor(t, tau, self.s)), rel=1e-12)

    def test_H2_both_active(self):
        t, tau = 0.5, 0.9
        q = self.s.q
        sub = sum(
            g * mp_qpow(z, q * tau, 2.5, q) for g, z in zip(self.s.gammas, self.s.zetas)
        ) / (mpmath.mpf(7) / 15 * mp_gamma(3.5, q))
        expect = _prefactor(t, tau, self.s) - sub
        assert eval_H2(t, tau, self.s, self.gc) == pytest.approx(float(expect), rel=1e-12)

    def test_H2_without_gammas(self):
        s = example1(gammas=(0.0, 0.0))
        gc = compute_constants(s)
        a2 = float(mp_qpow(1, s.q * 0.3, 1.5, s.q))
        assert eval_H2(0.2, 0.3, s, gc) == pytest.approx(0.2 * a2 / (2 * gc.gamma_a1), rel=1e-12)

    def test_H3_branches(self):
        q = self.s.q
        z = self.s.zetas[0]
        # q tau = 0.3 lies above the point 0.2, so only the first term survives
        expect = (0.5 + 0.5) * mp_qpow(1, q * 0.9, 1.5, q) / mp_gamma(2.5, q)
        assert eval_H3(0.5, 0.9, 0.2, self.s, self.gc) == pytest.approx(float(expect), rel=1e-12)
        assert eval_H3(0.5, 0.3, 1.0, self.s, self.gc) == pytest.approx(0.0, abs=1e-15)
        t, tau = 0.5, 0.3
        expect = (t + 0.5) / mp_gamma(2.5, q) * (mp_qpow(1, q * tau, 1.5, q) - mp_qpow(z, q * tau, 1.5, q))
        assert eval_H3(t, tau, z, self.s, self.gc) == pytest.approx(float(expect), rel=1e-12)

    def test_vectorized_matches_scalar(self):
        T, TAU = np.meshgrid([0.1, 0.5, 0.9], [0.2, 0.7], indexing="ij")
        v = eval_H1(T, TAU, self.s, self.gc)
        assert v[1, 1] == pytest.approx(eval_H1(0.5, 0.7, self.s, self.gc), rel=1e-14)


class TestPhiAndG:
    def test_phi_zero_measure(self):
        s = example1(1)
        assert eval_phi(0.4, s, compute_constants(s)) == 0.0

    def test_phi_density_one_two_point(self):
        s = example1(1, gammas=(0.0, 0.0), betas=(0.0, 0.0), mu=1.0, measure=StieltjesMeasure((1.0,)))
        gc = compute_constants(s)
        tau = 0.6
        q = mpmath.mpf(s.q)
        qt = q * tau
        g1 = mp_gamma(s.alpha - 1, q)
        ga = mp_gamma(s.alpha, q)
        a2 = mp_qpow(1, qt, s.alpha - 2, q)
        # H1 + H2 with no gammas: t a2 / Gamma(alpha-1) minus the lower-branch term
        lower = mpmath.quad(lambda t: mp_qpow(t, qt, s.alpha - 1, q), [qt, 1]) / ga
        expect = a2 / (2 * g1) - lower
        assert eval_phi(tau, s, gc) == pytest.approx(float(expect), abs=1e-12)

    def test_phi_quadrature_orders_agree(self):
        s = example1(2)
        gc = compute_constants(s)
        assert eval_phi(0.5, s, gc, order=32) == pytest.approx(eval_phi(0.5, s, gc, order=64), abs=1e-10)

    def test_G_two_point(self):
        s = example1(1, gammas=(0.0, 0.0), betas=(0.0, 0.0), mu=0.0)
        gc = compute_constants(s)
        expect = eval_H1(0.3, 0.5, s, gc) + eval_H2(0.3, 0.5, s, gc)
        assert eval_G(0.3, 0.5, s, gc) == pytest.approx(expect, rel=1e-14)

    def test_G_case1_terms(self):
        s = example1(1)
        gc = compute_constants(s)
        t, tau = 0.45, 0.35
        h3 = sum(b * eval_H3(t, tau, z, s, gc) for b, z in zip(s.betas, s.zetas))
        expect = eval_H1(t, tau, s, gc) + eval_H2(t, tau, s, gc) + h3 / (49 / 12)
        assert eval_G(t, tau, s, gc) == pytest.approx(expect, rel=1e-13)

    def test_G_case2_has_phi_term(self):
        s = example1(2)
        gc = compute_constants(s)
        ev = GreenEvaluator(s, gc)
        t, tau = 0.45, 0.35
        base = eval_G(t, tau, example1(2, mu=0.0), compute_constants(example1(2, mu=0.0)))
        assert ev.G(t, tau) != pytest.approx(base)

    def test_G_requires_positive_rho(self):
        s = example1(1, nu=0.5)
        with pytest.raises(HypothesisViolation):
            eval_G(0.5, 0.5, s, compute_constants(s))

    def test_psi(self):
        s = example1(1, betas=(0.0, 0.0), mu=0.0)
        gc = compute_constants(s)
        a2 = float(mp_qpow(1, s.q * 0.4, 1.5, s.q))
        assert eval_psi2(0.4, s, gc) == pytest.approx(a2 / gc.gamma_a1, rel=1e-12)
        s2 = example1(2)
        gc2 = compute_constants(s2)
        assert eval_psi1(0.4, s2, gc2) <= gc2.sigma * eval_psi2(0.4, s2, gc2)


class TestHypotheses:
    def test_case1(self):
        r = validate_hypotheses(example1(1))
        assert r.passed and r.constants.rho == pytest.approx(49 / 12) and r.constants.B == 0.0
        assert r.to_dict()["constants"]["rho"] == pytest.approx(49 / 12)

    def test_case2(self):
        r = validate_hypotheses(example1(2))
        assert r.passed and r.constants.B == pytest.approx(1 / 6)
        assert r.phi_min_sampled >= 0

    def test_rho_negative_fails(self):
        s = example1(1, nu=0.1, mu=0.0)
        r = validate_hypotheses(s)
        assert not r.passed and not r.rho_positive
        with pytest.raises(HypothesisViolation):
            require_hypotheses(s)

    def test_negative_B_fails(self):
        s = example1(1, measure=StieltjesMeasure((-1.0,)), mu=0.5)
        r = validate_hypotheses(s)
        assert not r.B_nonneg and not r.passed


class TestGreenIntegral:
    def test_routes_agree_on_aligned_lattice(self):
        # zetas and atoms on {q^k}: the direct kernel sum and the closed form coincide
        s = ProblemSpec(
            alpha=2.7,
            qp=QParams(0.5),
            gammas=(0.2, 0.3),
            betas=(0.5, 0.25),
            zetas=(0.25, 0.5),
            nu=3.0,
            mu=1.0,
            measure=StieltjesMeasure((), ((0.5, 0.4), (0.125, 0.3))),
        )
        y = lambda t: 1 + np.asarray(t, float) ** 2
        img = GreenImage(y, s)
        ts = np.array([1.0, 0.5, 0.25, 0.0625])
        direct = green_integral_kernel(ts, y, s)
        assert np.allclose(img(ts), direct, rtol=1e-12, atol=1e-14)

    def test_image_parts(self):
        s = example1(2)
        img = GreenImage(lambda t: np.ones_like(np.asarray(t, float)), s)
        assert img(0.0) == pytest.approx(img.value_at_zero, abs=1e-15)
        t = 0.37
        assert img(t) == pytest.approx(img.poly_part(t) + img.remainder(t), abs=1e-15)
