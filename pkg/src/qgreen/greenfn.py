"""Problem parameters, the (H1) constants, and the Green's function pieces.

Kernel pieces take ``t`` and ``tau`` (scalars or broadcastable arrays) and
evaluate at the pair (t, q*tau).  The m-2 nonlocal points enter H2 and H3
index by index: H2 subtracts sum_i gamma_i (zeta_i - q tau)^(alpha-1) over
the i with q tau <= zeta_i, and G weights H3(., ., zeta_i) by beta_i.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, HypothesisViolation
from .fracops import FracOrder, ceil_order
from .measure import StieltjesMeasure, quadrature_rule, stieltjes_integrate, total_mass
from .qkernel import QParams, q_gamma, q_power_frac

CHECK_TOL = 1e-10


@dataclass(frozen=True)
class ProblemSpec:
    alpha: float
    qp: QParams
    gammas: tuple = ()
    betas: tuple = ()
    zetas: tuple = ()
    nu: float = 1.0
    mu: float = 0.0
    measure: StieltjesMeasure = field(default_factory=StieltjesMeasure)
    lam: float = 1.0
    h: Callable | None = None
    f: Callable | None = None
    y_ell: Callable | None = None

    def __post_init__(self):
        for name in ("gammas", "betas", "zetas"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        problems = self.problems()
        if problems:
            path, msg = problems[0]
            raise DomainError(f"{path}: {msg}")

    @property
    def n(self):
        return ceil_order(self.alpha)

    @property
    def order(self):
        return FracOrder.of(self.alpha)

    @property
    def q(self):
        return self.qp.q

    def problems(self):
        """Structural invariant breaches as (field, message) pairs."""
        out = []
        if not self.alpha > 2 or ceil_order(self.alpha) <= 2:
            out.append(("alpha", f"need n-1 < alpha <= n with n > 2, got alpha={self.alpha}"))
        m2 = len(self.zetas)
        if len(self.gammas) != m2 or len(self.betas) != m2:
            out.append(("gammas", "gammas, betas and zetas must have equal length"))
        if any(g < 0 for g in self.gammas):
            out.append(("gammas", "gamma_i must be nonnegative"))
        if sum(self.gammas) >= 1:
            out.append(("gammas", f"sum of gammas must be < 1, got {sum(self.gammas)}"))
        if any(b < 0 for b in self.betas):
            out.append(("betas", "beta_i must be nonnegative"))
        if any(not (0 < z < 1) for z in self.zetas):
            out.append(("zetas", "zeta_i must lie in (0, 1)"))
        if any(b <= a for a, b in zip(self.zetas, self.zetas[1:])):
            out.append(("zetas", "zetas must be strictly increasing"))
        if not self.nu > 0:
            out.append(("nu", "nu must be positive"))
        if self.mu < 0:
            out.append(("mu", "mu must be nonnegative"))
        if not self.lam > 0:
            out.append(("lambda", "lambda must be positive"))
        return out

    def with_lambda(self, lam):
        from dataclasses import replace

        return replace(self, lam=float(lam))


@dataclass(frozen=True)
class GreenConstants:
    delta: float
    cshift: float
    sigma: float
    B: float
    rho: float
    Phat: float
    Ptilde: float
    gamma_a1: float  # Gamma_q(alpha - 1)
    gamma_a: float  # Gamma_q(alpha)
    lam_total: float  # int_0^1 dLambda


def compute_constants(spec: ProblemSpec) -> GreenConstants:
    P = spec.qp
    delta = 1.0 - sum(spec.gammas)
    if delta <= 0:
        raise HypothesisViolation(f"delta = {delta} must be positive")
    cshift = sum(g * z for g, z in zip(spec.gammas, spec.zetas)) / delta
    sigma = 1.0 + cshift
    B = stieltjes_integrate(lambda t: t + cshift, spec.measure)
    rho = spec.nu - sum(spec.betas) - spec.mu * B
    ga1 = q_gamma(spec.alpha - 1.0, P)
    ga = q_gamma(spec.alpha, P)
    if rho != 0:
        Phat = 1.0 + spec.mu * B / rho
        Ptilde = sum(spec.betas) / (rho * ga1)
    else:
        Phat = Ptilde = math.inf
    return GreenConstants(
        delta, cshift, sigma, B, rho, Phat, Ptilde, ga1, ga, total_mass(spec.measure)
    )


def _qpow_split(a, b, order, P):
    """(a - b)^(order) where b <= a, else 0 (the piece is switched off)."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    on = b <= a
    out = q_power_frac(a, np.where(on, b, a), order, P)
    return np.where(on, out, 0.0), on


def _shape(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _prefactor_term(t, tau, spec, gc):
    """[t + cshift] (1 - q tau)^(alpha-2) / (2 Gamma_q(alpha-1))."""
    a2 = q_power_frac(1.0, spec.q * np.asarray(tau, float), spec.alpha - 2.0, spec.qp)
    return (np.asarray(t, float) + gc.cshift) * a2 / (2.0 * gc.gamma_a1)


def eval_H1(t, tau, spec, gc):
    qtau = spec.q * np.asarray(tau, float)
    sub, _ = _qpow_split(t, qtau, spec.alpha - 1.0, spec.qp)
    return _shape(_prefactor_term(t, tau, spec, gc) - sub / gc.gamma_a)


def eval_H2(t, tau, spec, gc):
    qtau = spec.q * np.asarray(tau, float)
    acc = 0.0
    for g, z in zip(spec.gammas, spec.zetas):
        piece, _ = _qpow_split(z, qtau, spec.alpha - 1.0, spec.qp)
        acc = acc + g * piece
    val = _prefactor_term(t, tau, spec, gc) - acc / (gc.delta * gc.gamma_a)
    return _shape(np.broadcast_to(val, np.broadcast(np.asarray(t), np.asarray(tau)).shape))


def eval_H3(t, tau, zeta_i, spec, gc):
    qtau = spec.q * np.asarray(tau, float)
    a2 = q_power_frac(1.0, qtau, spec.alpha - 2.0, spec.qp)
    sub, _ = _qpow_split(zeta_i, qtau, spec.alpha - 2.0, spec.qp)
    return _shape((np.asarray(t, float) + gc.cshift) / gc.gamma_a1 * (a2 - sub))


class GreenEvaluator:
    """Constants plus evaluators, with phi(tau) memoised per tau.

    The memo is a plain dict: fill it sequentially (``prefill_phi``) before
    sharing the evaluator across threads.
    """

    def __init__(self, spec: ProblemSpec, gc: GreenConstants | None = None, order=None):
        self.spec = spec
        self.gc = gc or compute_constants(spec)
        self.order = order
        self._phi = {}

    def H1(self, t, tau):
        return eval_H1(t, tau, self.spec, self.gc)

    def H2(self, t, tau):
        return eval_H2(t, tau, self.spec, self.gc)

    def H3(self, t, tau, zeta_i):
        return eval_H3(t, tau, zeta_i, self.spec, self.gc)

    def phi(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        out = np.empty(tau_arr.shape)
        for idx, tv in np.ndenumerate(tau_arr):
            key = float(tv)
            if key not in self._phi:
                self._phi[key] = eval_phi(key, self.spec, self.gc, order=self.order)
            out[idx] = self._phi[key]
        return _shape(out)

    def prefill_phi(self, taus):
        self.phi(np.asarray(taus, dtype=float))

    def G(self, t, tau):
        return eval_G(t, tau, self.spec, self.gc, phi=self.phi)

    def psi1(self, tau):
        return eval_psi1(tau, self.spec, self.gc)

    def psi2(self, tau):
        return eval_psi2(tau, self.spec, self.gc)


def eval_phi(tau, spec, gc, order=None):
    """int_0^1 [H1(t, q tau) + H2(t, q tau)] dLambda(t), split at t = q tau."""
    tau = float(tau)
    kw = {} if order is None else {"order": order}
    g = lambda t: eval_H1(t, tau, spec, gc) + eval_H2(t, tau, spec, gc)
    return stieltjes_integrate(g, spec.measure, kinks=[spec.q * tau], **kw)


def eval_G(t, tau, spec, gc, phi=None):
    if gc.rho <= 0:
        raise HypothesisViolation(f"rho = {gc.rho} must be positive")
    phi = phi or (lambda s: _phi_vec(s, spec, gc))
    t_arr = np.asarray(t, float)
    val = eval_H1(t, tau, spec, gc) + eval_H2(t, tau, spec, gc)
    for b, z in zip(spec.betas, spec.zetas):
        if b:
            val = val + b / gc.rho * eval_H3(t, tau, z, spec, gc)
    if spec.mu:
        val = val + (t_arr + gc.cshift) * spec.mu / gc.rho * phi(tau)
    return _shape(val)


def _phi_vec(tau, spec, gc):
    tau_arr = np.asarray(tau, float)
    out = np.vectorize(lambda s: eval_phi(s, spec, gc), otypes=[float])(tau_arr)
    return _shape(out)


def eval_psi1(tau, spec, gc):
    P = spec.qp
    qtau = spec.q * np.asarray(tau, float)
    a2 = q_power_frac(1.0, qtau, spec.alpha - 2.0, P)
    a1 = q_power_frac(1.0, qtau, spec.alpha - 1.0, P)
    first = (gc.sigma / gc.gamma_a1 * a2 - a1 / (gc.delta * gc.gamma_a)) * gc.Phat
    if spec.zetas and gc.Ptilde:
        sub, _ = _qpow_split(spec.zetas[-1], qtau, spec.alpha - 2.0, P)
        first = first + (a2 - sub) * gc.Ptilde
    return _shape(first)


def eval_psi2(tau, spec, gc):
    a2 = q_power_frac(1.0, spec.q * np.asarray(tau, float), spec.alpha - 2.0, spec.qp)
    return _shape((gc.Phat / gc.gamma_a1 + gc.Ptilde) * a2)


@dataclass
class HypothesisReport:
    constants: GreenConstants
    rho_positive: bool
    B_nonneg: bool
    phi_nonneg: bool
    phi_min_sampled: float
    samples: int
    check_tol: float = CHECK_TOL
    psi1_min_sampled: float = math.nan

    @property
    def passed(self):
        return self.rho_positive and self.B_nonneg and self.phi_nonneg

    def to_dict(self):
        c = self.constants
        return {
            "passed": self.passed,
            "rho_positive": self.rho_positive,
            "B_nonneg": self.B_nonneg,
            "phi_nonneg": self.phi_nonneg,
            "phi_min_sampled": self.phi_min_sampled,
            "psi1_min_sampled": self.psi1_min_sampled,
            "samples": self.samples,
            "check_tol": self.check_tol,
            "constants": {
                "delta": c.delta,
                "cshift": c.cshift,
                "sigma": c.sigma,
                "B": c.B,
                "rho": c.rho,
                "Phat": c.Phat,
                "Ptilde": c.Ptilde,
            },
        }


def validate_hypotheses(spec, n_tau_samples=50, check_tol=CHECK_TOL) -> HypothesisReport:
    gc = compute_constants(spec)
    taus = (np.arange(n_tau_samples) + 0.5) / n_tau_samples
    if n_tau_samples:
        phis = np.array([eval_phi(s, spec, gc) for s in taus])
        phi_min = float(phis.min())
    else:
        phi_min = 0.0
    psi1_min = math.nan
    if gc.rho > 0 and n_tau_samples:
        psi1_min = float(np.min(eval_psi1(taus, spec, gc)))
        if psi1_min < 0:
            warnings.warn(f"psi1 dips below zero (min {psi1_min:.3e}); lower bound is vacuous")
    return HypothesisReport(
        constants=gc,
        rho_positive=gc.rho > 0,
        B_nonneg=gc.B >= -check_tol,
        phi_nonneg=phi_min >= -check_tol,
        phi_min_sampled=phi_min,
        samples=int(n_tau_samples),
        check_tol=check_tol,
        psi1_min_sampled=psi1_min,
    )


def require_hypotheses(spec, n_tau_samples=50):
    rep = validate_hypotheses(spec, n_tau_samples)
    if not rep.passed:
        raise HypothesisViolation(
            f"(H1) fails: rho={rep.constants.rho:.6g}, B={rep.constants.B:.6g}, "
            f"min phi={rep.phi_min_sampled:.3g}"
        )
    return rep


# ---------------------------------------------------------------------------
# Green's integral x(t) = int_0^1 G(t, q tau) y(tau) d_q tau
#
# Written out, x(t) = c1 (t + cshift) - d - I^alpha y(t), where each
# fractional integral is the Jackson sum over its own endpoint's lattice
# (t q^k, zeta_i q^k).  On the base lattice {q^k} this coincides with the
# direct kernel sum below; off it, only this form keeps the boundary
# conditions exact.


def green_coefficients(spec, gc, I1_one, I1_z, Ia_z, lam_Ia):
    """(c1, d) from I^{alpha-1}y(1), I^{alpha-1}y(zeta_i), I^alpha y(zeta_i), int I^alpha y dLambda."""
    if gc.rho <= 0:
        raise HypothesisViolation(f"rho = {gc.rho} must be positive")
    I1_z = np.asarray(I1_z, float)
    Ia_z = np.asarray(Ia_z, float)
    betas = np.asarray(spec.betas, float)
    gammas = np.asarray(spec.gammas, float)
    d = float(np.dot(gammas, Ia_z)) / gc.delta
    c1 = I1_one
    c1 += float(np.dot(betas, I1_one - I1_z)) / gc.rho
    c1 += spec.mu / gc.rho * (gc.B * I1_one - lam_Ia - gc.lam_total * d)
    return c1, d


def jackson_depth(P: QParams, tol=None):
    tol = P.trunc_tol if tol is None else tol
    return int(math.ceil(math.log(tol) / math.log(P.q))) + 8


def _sample(y, pts):
    pts = np.asarray(pts, float)
    try:
        vals = np.asarray(y(pts), dtype=float)
        if vals.shape == pts.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.vectorize(lambda s: float(y(s)), otypes=[float])(pts)


class GreenImage:
    """x = Green's integral of a given source y, evaluable anywhere on [0, 1].

    ``poly_part`` is the affine piece c1 (t + cshift) - d; ``remainder`` is
    -I^alpha y(t).  Verification code differentiates the remainder only,
    since q-derivatives of order >= 2 annihilate the affine piece.
    """

    def __init__(self, y, spec, gc=None, depth=None):
        from .fracops import rl_integral_lattice

        self.spec = spec
        self.gc = gc or compute_constants(spec)
        self.y = y
        P = spec.qp
        self.depth = depth or jackson_depth(P)
        self._rl = rl_integral_lattice
        a = spec.alpha
        z = np.asarray(spec.zetas, float)
        I1_one = self._frac(1.0, a - 1.0)
        I1_z = self._frac(z, a - 1.0) if z.size else np.empty(0)
        Ia_z = self._frac(z, a) if z.size else np.empty(0)
        xs, ws = quadrature_rule(spec.measure)
        lam_Ia = float(np.dot(ws, self._frac(xs, a))) if xs.size else 0.0
        self.c1, self.d = green_coefficients(spec, self.gc, float(I1_one), I1_z, Ia_z, lam_Ia)

    def _frac(self, t, order):
        t = np.asarray(t, float)
        out = np.zeros(t.shape)
        pos = t > 0
        if np.any(pos):
            tp = t[pos]
            grid = tp[:, None] * self.spec.q ** np.arange(self.depth)
            vals = _sample(self.y, grid)
            out[pos] = self._rl(vals, order, tp, self.spec.qp)[:, 0]
        return _shape(out)

    @property
    def value_at_zero(self):
        return self.c1 * self.gc.cshift - self.d

    def poly_part(self, t):
        return _shape(self.c1 * (np.asarray(t, float) + self.gc.cshift) - self.d)

    def remainder(self, t):
        return _shape(-np.asarray(self._frac(np.asarray(t, float), self.spec.alpha)))

    def __call__(self, t):
        t = np.asarray(t, float)
        return _shape(self.poly_part(t) + self.remainder(t))


def green_integral_kernel(t, y, spec, gc=None, depth=None):
    """Direct Jackson sum of G(t, q tau) y(tau) over tau = q^k, k < depth."""
    gc = gc or compute_constants(spec)
    depth = depth or jackson_depth(spec.qp)
    taus = spec.q ** np.arange(depth)
    ev = GreenEvaluator(spec, gc)
    yv = _sample(y, taus)
    t_arr = np.asarray(t, float)
    out = np.empty(t_arr.shape)
    for idx, tv in np.ndenumerate(t_arr):
        out[idx] = (1.0 - spec.q) * np.sum(taus * ev.G(float(tv), taus) * yv)
    return _shape(out)
