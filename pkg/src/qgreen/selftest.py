"""Built-in invariant suites for the q-calculus kernels and the Green's function.

Each suite returns a SuiteResult; ``run_all`` collects them for the CLI's
pass/fail matrix.  Sampling uses a fixed seed so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fracops
from .greenfn import GreenImage, ProblemSpec
from .measure import StieltjesMeasure
from .qkernel import (
    QParams,
    jackson_integral,
    q_bracket,
    q_derivative,
    q_gamma,
    q_power_frac,
    q_power_int,
)

SEED = 20240611


@dataclass
class SuiteResult:
    name: str
    passed: bool
    cases: int
    worst: float
    tol: float
    detail: str = ""

    def row(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28} cases={self.cases:<5} worst={self.worst:.3e} tol={self.tol:.0e} {self.detail}".rstrip()


def _result(name, errs, tol, detail=""):
    errs = [float(e) for e in errs]
    worst = max(errs) if errs else 0.0
    ok = bool(errs) and all(math.isfinite(e) for e in errs) and worst < tol
    return SuiteResult(name, ok, len(errs), worst, tol, detail)


def gamma_recurrence(trunc_tol=1e-14, n=50):
    """|Gamma_q(x+1) - [x]_q Gamma_q(x)| / Gamma_q(x+1) for random x and q in {0.2, 0.5, 0.9}."""
    rng = np.random.default_rng(SEED)
    errs = []
    for q in (0.2, 0.5, 0.9):
        P = QParams(q, trunc_tol=trunc_tol)
        for x in rng.uniform(0.1, 8.0, n):
            g1 = q_gamma(float(x) + 1.0, P)
            errs.append(abs(g1 - q_bracket(float(x), P) * q_gamma(float(x), P)) / abs(g1))
    return _result("gamma_recurrence", errs, 1e-10)


def qpower_int_frac(trunc_tol=1e-14, n=25):
    rng = np.random.default_rng(SEED + 1)
    errs = []
    for q in (0.3, 0.7):
        P = QParams(q, trunc_tol=trunc_tol)
        for k in (0, 1, 2, 3):
            for _ in range(n):
                a = float(rng.uniform(0.05, 1.0))
                b = float(rng.uniform(0.0, a))
                exact = q_power_int(a, b, k, P)
                approx = float(q_power_frac(a, b, float(k), P))
                errs.append(abs(approx - exact) / max(abs(exact), 1e-300))
    return _result("qpower_int_vs_frac", errs, 1e-10)


def jackson_linearity(trunc_tol=1e-14):
    P = QParams(0.5, trunc_tol=trunc_tol)
    f = lambda s: s**2 + 1.0
    g = lambda s: math.cos(s)
    errs = []
    for a, b in ((1.0, 2.0), (-0.5, 3.0), (2.5, -1.5)):
        for t in (0.3, 0.7, 1.0):
            lhs = jackson_integral(lambda s: a * f(s) + b * g(s), t, P)
            rhs = a * jackson_integral(f, t, P) + b * jackson_integral(g, t, P)
            errs.append(abs(lhs - rhs))
    return _result("jackson_linearity", errs, 1e-12)


def derivative_inverts_jackson(trunc_tol=1e-14):
    errs = []
    for q in (0.3, 0.5, 0.8):
        P = QParams(q, trunc_tol=trunc_tol)
        for f in (lambda s: 1.0, lambda s: s, lambda s: 3 * s**2 - s + 2):
            F = lambda t, f=f: jackson_integral(f, t, P)
            for k in range(1, 6):
                t = q**k
                errs.append(abs(q_derivative(F, t, P) - f(t)))
    return _result("derivative_inverts_jackson", errs, 1e-10)


def power_rule(trunc_tol=1e-14):
    """I^a t^g = Gamma_q(g+1)/Gamma_q(a+g+1) t^(a+g), three q values."""
    errs = []
    for q in (0.3, 0.5, 0.7):
        P = QParams(q, trunc_tol=trunc_tol)
        for g in (0.0, 1.0, 2.5):
            for a in (0.5, 1.5, 3.5):
                t = 0.7
                lhs = fracops.rl_integral(lambda s: s**g, a, t, P)
                rhs = q_gamma(g + 1, P) / q_gamma(a + g + 1, P) * t ** (a + g)
                errs.append(abs(lhs - rhs) / abs(rhs))
    return _result("power_rule", errs, 1e-8)


def semigroup_and_inversion(trunc_tol=1e-14):
    """I^a I^b f = I^(a+b) f and D^a I^a f = f for f = t^g."""
    errs = []
    for q in (0.3, 0.7):
        P = QParams(q, trunc_tol=trunc_tol)
        for g in (0, 1, 2):
            f = lambda s, g=g: float(s) ** g
            for a in (0.5, 1.0, 1.5):
                for t in (0.25, 0.5, 1.0):
                    Ia = lambda s, a=a: fracops.rl_integral(f, a, float(s), P)
                    inv = fracops.rl_derivative(Ia, a, t, P)
                    errs.append(abs(inv - f(t)))
                    for b in (0.5, 1.0, 1.5):
                        lhs = fracops.rl_integral(
                            lambda s: fracops.rl_integral(f, b, s, P), a, t, P
                        )
                        errs.append(abs(lhs - fracops.rl_integral(f, a + b, t, P)))
    return _result("semigroup_and_inversion", errs, 1e-8)


def caputo_annihilation(trunc_tol=1e-14):
    errs = []
    for q, alpha in ((1 / 3, 3.5), (0.5, 2.3), (0.7, 1.6)):
        P = QParams(q, trunc_tol=trunc_tol)
        n = fracops.ceil_order(alpha)
        for j in range(n):
            for k in range(20):
                t = q**k if k < 10 else 0.95 * q ** (k - 10)
                errs.append(abs(fracops.caputo_derivative(lambda s, j=j: s**j, alpha, t, P)))
    return _result("caputo_annihilation", errs, 1e-10)


def _example_spec(trunc_tol=1e-14, density=()):
    return ProblemSpec(
        alpha=3.5,
        qp=QParams(1 / 3, trunc_tol=trunc_tol),
        gammas=(1 / 5, 1 / 3),
        betas=(2 / 3, 1 / 4),
        zetas=(1 / 3, 1 / 2),
        nu=5.0,
        mu=3.0,
        measure=StieltjesMeasure(density),
    )


def green_reconstruction(trunc_tol=1e-14):
    """Boundary and ODE residuals of x = int G y for y in {1, t, t^2}."""
    from .verify import check_residuals

    errs = []
    for dens in ((), (-1.0, 2.0)):
        spec = _example_spec(trunc_tol, dens)
        for y in (lambda t: np.ones_like(np.asarray(t, float)), lambda t: t, lambda t: t * t):
            r = check_residuals(GreenImage(y, spec), spec, source=lambda t, y=y: float(y(t)))
            # scale the ODE residual so one tolerance covers both budgets
            errs.append(max(r.ode_residual_sup / 10.0, r.bc0_residual, r.bc_mixed_residual, *r.bc_der_residuals))
    return _result("green_reconstruction", errs, 1e-6)


def green_bounds(trunc_tol=1e-14, grid_n=40):
    from .verify import check_green_properties

    worst = 0.0
    failing = set()
    for dens in ((), (-1.0, 2.0)):
        rep = check_green_properties(_example_spec(trunc_tol, dens), grid_n=grid_n)
        worst = max(worst, -rep.worst)
        failing |= set(rep.failures)
    detail = f"failing: {', '.join(sorted(failing))}" if failing else ""
    return SuiteResult("green_bounds", not failing, 2, worst, 1e-10, detail)


SUITES = {
    "gamma_recurrence": gamma_recurrence,
    "qpower_int_vs_frac": qpower_int_frac,
    "jackson_linearity": jackson_linearity,
    "derivative_inverts_jackson": derivative_inverts_jackson,
    "power_rule": power_rule,
    "semigroup_and_inversion": semigroup_and_inversion,
    "caputo_annihilation": caputo_annihilation,
    "green_reconstruction": green_reconstruction,
    "green_bounds": green_bounds,
}


def run_all(trunc_tol=1e-14, only=None):
    out = []
    for name, fn in SUITES.items():
        if only and name not in only:
            continue
        try:
            out.append(fn(trunc_tol=trunc_tol))
        except Exception as exc:  # a crashing suite is a failing suite
            out.append(SuiteResult(name, False, 0, math.inf, 0.0, f"error: {type(exc).__name__}: {exc}"))
    return out
