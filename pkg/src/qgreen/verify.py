"""Independent checks: residuals of a candidate solution, Green-kernel bounds,
and sampled (H2)-(H4) conditions on the nonlinearity.

ODE residuals go through ``fracops.caputo_derivative``; nothing in the
solver calls it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fracops
from .greenfn import (
    CHECK_TOL,
    GreenEvaluator,
    compute_constants,
    eval_H1,
    eval_H2,
    eval_H3,
    eval_psi1,
    eval_psi2,
)
from .measure import stieltjes_integrate
from .qkernel import q_derivative, q_power_frac

VERIFY_QUAD_ORDER = 48


@dataclass
class ResidualReport:
    ode_residual_sup: float
    bc0_residual: float
    bc_der_residuals: list
    bc_mixed_residual: float
    ode_nodes: list = field(default_factory=list)
    note: str = (
        "ODE residual tolerance is looser than the solver tolerance: it stacks "
        "n nested q-differences and one fractional q-integral"
    )

    def within(self, ode_tol=1e-5, bc_tol=1e-6):
        bcs = [self.bc0_residual, self.bc_mixed_residual, *self.bc_der_residuals]
        return self.ode_residual_sup < ode_tol and max(bcs) < bc_tol

    def to_dict(self):
        return asdict(self)


def _split(x):
    """(remainder, value_at_zero) of an evaluator, falling back to x itself."""
    rem = getattr(x, "remainder", None)
    if rem is None:
        return x, float(x(0.0))
    return rem, float(x.value_at_zero)


def _limit_at_zero(g, P, depth):
    """lim_{s->0} g(s) from s = q^depth, q^(depth+1), q^(depth+2).

    Fits g = A + C r^j (Aitken); falls back to a linear Richardson step
    when the ratio is not a contraction.
    """
    a, b, c = (g(P.q ** (depth + k)) for k in range(3))
    d0, d1 = b - a, c - b
    if d0 != 0.0:
        r = d1 / d0
        if 0.0 < r < 0.95 and abs(r - P.q) > 1e-3:
            return c - d1 * r / (1.0 - r)
    return (c - P.q * b) / (1.0 - P.q)


def check_residuals(x, spec, gc=None, source=None, ode_nodes=None, depth=None):
    """Residuals of the boundary value problem (or of C D^alpha x + y = 0 when ``source`` is y).

    ``x`` must be evaluable off the base lattice.  When it exposes
    ``remainder``/``value_at_zero`` (Green images and solver evaluators),
    derivatives of order >= 2 are taken of the remainder alone; the affine
    part is annihilated exactly.
    """
    gc = gc or compute_constants(spec)
    P = spec.qp
    q = P.q
    if source is None:
        lam, h, f = spec.lam, spec.h, spec.f
        source = lambda t: lam * float(h(t)) * float(f(t, float(x(t))))
    rem, x0 = _split(x)
    n = spec.n
    if ode_nodes is None:
        kmax = max(1, int(math.floor(math.log(1e-4) / math.log(q))))
        ode_nodes = [q**k for k in range(1, kmax + 1)]
    if depth is None:
        depth = int(math.ceil(math.log(1e-16) / math.log(q)))
    worst = 0.0
    for t in ode_nodes:
        cd = fracops.caputo_derivative(rem, spec.alpha, t, P, depth=depth)
        worst = max(worst, abs(cd + source(t)))
    deep = int(math.ceil(math.log(1e-30) / math.log(q)))
    der = []
    for j in range(2, n):
        g = lambda s, j=j: fracops.q_derivative_n(rem, j, s, P)
        der.append(abs(_limit_at_zero(g, P, deep)))
    bc0 = abs(x0 - sum(g * float(x(z)) for g, z in zip(spec.gammas, spec.zetas)))
    dq = lambda t: q_derivative(lambda s: float(x(s)), t, P)
    lam_x = stieltjes_integrate(x, spec.measure, order=VERIFY_QUAD_ORDER)
    mixed = spec.nu * dq(1.0) - spec.mu * lam_x
    mixed -= sum(b * dq(z) for b, z in zip(spec.betas, spec.zetas))
    return ResidualReport(
        ode_residual_sup=float(worst),
        bc0_residual=float(bc0),
        bc_der_residuals=[float(v) for v in der],
        bc_mixed_residual=float(abs(mixed)),
        ode_nodes=[float(t) for t in ode_nodes],
    )


@dataclass
class GreenPropertyReport:
    margins: dict
    grid_n: int
    tol: float = CHECK_TOL

    @property
    def worst(self):
        return min(self.margins.values()) if self.margins else 0.0

    @property
    def failures(self):
        return {k: v for k, v in self.margins.items() if v < -self.tol}

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return {
            "grid_n": self.grid_n,
            "tol": self.tol,
            "worst": self.worst,
            "passed": self.passed,
            "margins": self.margins,
        }


def check_green_properties(spec, gc=None, grid_n=100, tol=CHECK_TOL):
    """Worst margins (rhs - lhs) of the kernel inequalities on a grid_n^2 grid.

    Positivity margins are the minimum value itself.  The (ii) bounds use
    zeta = 1 in H2 for the outer terms, with the problem's own gammas.
    """
    gc = gc or compute_constants(spec)
    pts = (np.arange(grid_n) + 1.0) / (grid_n + 1.0)
    T, TAU = np.meshgrid(pts, pts, indexing="ij")
    P = spec.qp
    qtau = spec.q * TAU
    a2 = q_power_frac(1.0, qtau, spec.alpha - 2.0, P)
    a1 = q_power_frac(1.0, qtau, spec.alpha - 1.0, P)
    h1 = eval_H1(T, TAU, spec, gc)
    h2 = eval_H2(T, TAU, spec, gc)
    h12 = h1 + h2
    shift = T + gc.cshift
    cap = shift * a2 / gc.gamma_a1
    m = {}
    m["i.H1_positive"] = float(h1.min())
    m["i.H2_positive"] = float(h2.min())
    m["i.H1+H2<=shifted_cap"] = float((cap - h12).min())
    m["i.shifted_cap<=sigma_cap"] = float((gc.sigma * a2 / gc.gamma_a1 - cap).min())
    for i, z in enumerate(spec.zetas):
        h3 = eval_H3(T, TAU, z, spec, gc)
        m[f"i.H3[{i}]_positive"] = float(h3.min())
        m[f"i.H3[{i}]/sigma<=H3[{i}]"] = float((h3 - h3 / gc.sigma).min())
        m[f"i.H3[{i}]<=shifted_cap"] = float((cap - h3).min())
    # H1(1, q tau) + H2(1, q tau; 1): every nonlocal point moved to 1
    outer = (gc.sigma * a2 / gc.gamma_a1) - a1 / gc.gamma_a - (
        sum(spec.gammas) / (gc.delta * gc.gamma_a)
    ) * a1
    m["ii.lower"] = float((h12 - shift / gc.sigma * outer).min())
    m["ii.upper"] = float((outer - h12).min())
    if gc.rho > 0:
        ev = GreenEvaluator(spec, gc)
        ev.prefill_phi(pts)
        G = ev.G(T, TAU)
        m["iii.lower"] = float((G - shift / gc.sigma * eval_psi1(TAU, spec, gc)).min())
        m["iii.upper"] = float((shift * eval_psi2(TAU, spec, gc) - G).min())
    return GreenPropertyReport(m, grid_n, tol)


@dataclass
class FHypothesisReport:
    violations: dict
    samples: dict
    x_max: float

    @property
    def passed(self):
        return not any(self.violations.values())

    def to_dict(self):
        return {
            "passed": self.passed,
            "violations": self.violations,
            "samples": self.samples,
            "x_max": self.x_max,
        }


def check_f_hypotheses(spec, n_samples=50, x_max=10.0, tol=1e-12):
    """Sampled (H2)-(H4): positivity, monotonicity in x, and f(t, l x) >= y(l) f(t, x).

    Counts violations per condition over t in [0, 1] (h on (0, 1]),
    x in [0, x_max] and l in (0, 1).
    """
    f, h, y = spec.f, spec.h, spec.y_ell
    ts = np.linspace(0.0, 1.0, n_samples)
    th = np.linspace(0.0, 1.0, n_samples + 1)[1:]
    xs = np.linspace(0.0, x_max, n_samples)
    ls = (np.arange(n_samples) + 1.0) / (n_samples + 1.0)

    TT, XX = np.meshgrid(ts, xs, indexing="ij")
    F = _grid_eval(lambda a, b: f(a, b), TT, XX)
    hv = _grid_eval(lambda a: h(a), th)
    v = {}
    v["f_nonnegative"] = int(np.sum(F < -tol))
    v["h_nonnegative"] = int(np.sum(hv < -tol))
    v["f_nondecreasing_in_x"] = int(np.sum(np.diff(F, axis=1) < -tol))
    v["f_t0_not_identically_zero"] = int(np.all(np.abs(F[:, 0]) <= tol))
    v["h_not_identically_zero"] = int(np.all(np.abs(hv) <= tol))
    if y is not None:
        yl = _grid_eval(lambda a: y(a), ls)
        v["y_in_(l,1)"] = int(np.sum((yl <= ls) | (yl >= 1.0)))
        T3, X3, L3 = np.meshgrid(ts, xs, ls, indexing="ij")
        lhs = _grid_eval(lambda a, b: f(a, b), T3, L3 * X3)
        rhs = yl[None, None, :] * F[:, :, None]
        v["H4_f(t,lx)>=y(l)f(t,x)"] = int(np.sum(lhs < rhs - tol))
    samples = {"t": n_samples, "x": n_samples, "ell": n_samples if y is not None else 0}
    return FHypothesisReport(v, samples, float(x_max))


def _grid_eval(fn, *arrays):
    try:
        out = np.asarray(fn(*arrays), dtype=float)
        if out.shape == arrays[0].shape:
            return out
    except (TypeError, ValueError):
        pass
    vec = np.vectorize(lambda *a: float(fn(*a)), otypes=[float])
    return vec(*arrays)
