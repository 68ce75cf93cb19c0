"""Fractional q-integrals and q-derivatives (Riemann-Liouville and Caputo).

Integrals are plain float Jackson sums. Stacked q-difference quotients
lose roughly n digits per decade of depth, so the n-fold D_q stencils are
evaluated in mpmath at ``dps`` digits; callers get floats back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DomainError, TruncationNotConverged
from .qkernel import (
    QParams,
    kernel_weight_total,
    kernel_weights,
    q_gamma,
    q_power_frac,
)

DEFAULT_DPS = 50


@dataclass(frozen=True)
class FracOrder:
    alpha: float
    n: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("fractional order must be positive")
        if not (self.n - 1 < self.alpha <= self.n):
            raise DomainError(f"need n-1 < alpha <= n, got alpha={self.alpha}, n={self.n}")

    @classmethod
    def of(cls, alpha):
        return cls(float(alpha), ceil_order(alpha))


def ceil_order(alpha):
    """Smallest integer n >= alpha."""
    return int(math.ceil(alpha - 1e-15))


def rl_integral(f, alpha, t, P: QParams):
    """(I_q^alpha f)(t) as a Jackson sum over tau = t q^k.

    Summation stops once two consecutive terms are below trunc_tol relative
    to the running sum.
    """
    if alpha < 0:
        raise DomainError("order must be nonnegative")
    if alpha == 0:
        return f(t)
    if t == 0:
        return 0.0
    q = P.q
    e = alpha - 1.0
    w = q_power_frac(1.0, q, e, P)
    scale = t**alpha * (1.0 - q) / q_gamma(alpha, P)
    total = 0.0
    qk = 1.0
    prev_small = False
    for k in range(P.max_terms):
        term = qk * w * f(t * qk)
        total += term
        # relative test: t^alpha makes absolute terms tiny at deep t
        small = abs(term) <= P.trunc_tol * abs(total)
        if small and prev_small:
            return scale * total
        prev_small = small
        w *= (1.0 - q ** (e + k + 1)) / (1.0 - q ** (k + 1))
        qk *= q
    raise TruncationNotConverged(f"I_q^{alpha} did not converge in {P.max_terms} terms")


def rl_integral_lattice(values, alpha, t, P: QParams):
    """I_q^alpha at every node t q^k given samples values[..., j] = f(t q^j).

    The trailing axis is the lattice; sums are truncated at the last sample.
    ``t`` may be an array broadcasting against ``values[..., 0]``.
    """
    values = np.asarray(values, dtype=float)
    N = values.shape[-1]
    q = P.q
    if alpha == 0:
        return values.copy()
    w = kernel_weights(alpha, P, N) * q ** np.arange(N)
    # Toeplitz: out[k] = sum_{j<N-k} w[j] v[k+j]
    M = np.zeros((N, N))
    for k in range(N):
        M[k, k:] = w[: N - k]
    sums = values @ M.T
    nodes = np.asarray(t, dtype=float)[..., None] * q ** np.arange(N)
    return nodes**alpha * (1.0 - q) / q_gamma(alpha, P) * sums


def _mp(v):
    return v if isinstance(v, mpmath.mpf) else mpmath.mpf(float(v))


def _call(f, x):
    try:
        return _mp(f(x))
    except TypeError:
        return _mp(f(float(x)))


def _nested_differences(vals, t, n, q):
    """D_q^n at t, qt, ... from mp samples vals[j] = f(t q^j); returns len-n list."""
    one = mpmath.mpf(1)
    cur = list(vals)
    for _ in range(n):
        cur = [
            (cur[j] - cur[j + 1]) / ((one - q) * t * q**j) for j in range(len(cur) - 1)
        ]
    return cur


def q_derivative_n(f, n, t, P: QParams, dps=DEFAULT_DPS):
    """n-fold first-order q-derivative D_q^n f at t > 0."""
    if t <= 0:
        raise DomainError("D_q^n needs t > 0")
    with mpmath.workdps(dps):
        q = mpmath.mpf(P.q)
        tm = _mp(t)
        vals = [_call(f, tm * q**j) for j in range(n + 1)]
        return float(_nested_differences(vals, tm, n, q)[0])


def rl_derivative(f, alpha, t, P: QParams, dps=DEFAULT_DPS):
    """(D_q^alpha f)(t) = D_q^n I_q^{n-alpha} f (t)."""
    if alpha == 0:
        return f(t)
    if alpha < 0:
        raise DomainError("order must be nonnegative")
    if t <= 0:
        raise DomainError("Riemann-Liouville derivative needs t > 0")
    n = ceil_order(alpha)
    beta = n - alpha
    with mpmath.workdps(dps):
        q = mpmath.mpf(P.q)
        tm = _mp(t)
        vals = [_mp(rl_integral(f, beta, float(tm * q**j), P)) for j in range(n + 1)]
        return float(_nested_differences(vals, tm, n, q)[0])


def default_depth(t, n, P: QParams, dps=DEFAULT_DPS):
    """Stencil depth where mp rounding in D_q^n stays below ~1e-20 relative."""
    ratio = 10.0 ** (-(dps - 20) / n)
    return max(int(math.ceil(math.log(ratio) / math.log(P.q))), n + 2)


def _mp_weights(e, q, count):
    """(1 - q^{j+1})^{(e)} for j < count, by the ratio recursion, in mp."""
    w = [mpmath.mpf(1)]
    w[0] = mpmath.qp(q, q) / mpmath.qp(q ** (e + 1), q)
    for k in range(1, count):
        w.append(w[-1] * (1 - q ** (e + k)) / (1 - q**k))
    return w


def _tail(g, J, q, w_next, e, tol):
    """sum_{j>J} q^j w_j g_j with g_j extrapolated as A + C r^j.

    r comes from the last three samples (Aitken); it covers smooth
    g (r = q) and integrable power singularities (1 < r < 1/q).  When the
    fit is unusable, g is held at its Richardson limit.
    """
    d1 = g[J] - g[J - 1]
    d0 = g[J - 1] - g[J - 2]
    r = d1 / d0 if d0 != 0 else mpmath.mpf(0)
    if not (0 < r < mpmath.mpf("0.95") / q) or abs(r - 1) < mpmath.mpf("1e-6"):
        A, C, r = (g[J] - q * g[J - 1]) / (1 - q), mpmath.mpf(0), q
    else:
        C = d1 / (r**J * (1 - 1 / r))
        A = g[J] - C * r**J
    total = mpmath.mpf(0)
    w = w_next
    j = J + 1
    qj = q**j
    rj = r**j
    while True:
        term = qj * w * (A + C * rj)
        total += term
        if abs(term) <= tol * (abs(total) + tol) and j > J + 5:
            return total
        w *= (1 - q ** (e + j + 1)) / (1 - q ** (j + 1))
        qj *= q
        rj *= r
        j += 1


def caputo_derivative(f, alpha, t, P: QParams, depth=None, dps=DEFAULT_DPS):
    """(C D_q^alpha f)(t) = I_q^{n-alpha} D_q^n f (t).

    D_q^n f is sampled at t q^j for j <= depth; beyond that it is
    extrapolated from the last three samples (see ``_tail``).  The default
    depth assumes f carries an O(1) polynomial part; for samples that are
    accurate relative to their own size (e.g. a remainder -I^alpha y) a
    deeper stencil pays off when D_q^n f is singular at 0.
    """
    if alpha <= 0:
        raise DomainError("Caputo order must be positive")
    if t <= 0:
        raise DomainError("Caputo derivative is evaluated at t > 0")
    n = ceil_order(alpha)
    beta = n - alpha
    if beta == 0:
        return q_derivative_n(f, n, t, P, dps)
    J = default_depth(t, n, P, dps) if depth is None else int(depth)
    J = max(J, 3)
    with mpmath.workdps(dps):
        q = mpmath.mpf(P.q)
        tm = _mp(t)
        e = mpmath.mpf(beta) - 1
        vals = [_call(f, tm * q**j) for j in range(J + n + 1)]
        g = _nested_differences(vals, tm, n, q)  # g[j] = D^n f(t q^j), j = 0..J
        w = _mp_weights(e, q, J + 2)
        partial = mpmath.fsum(q**j * w[j] * g[j] for j in range(J + 1))
        tail = _tail(g, J, q, w[J + 1], e, mpmath.mpf(10) ** (-dps + 10))
        scale = tm**beta * (1 - q) / mpmath.mpf(q_gamma(beta, P))
        return float(scale * (partial + tail))


def q_taylor_polynomial(f, n, P: QParams, dps=DEFAULT_DPS, probe=1e-6):
    """Coefficients D_q^i f(0) / Gamma_q(i+1), i < n, estimated at the lattice limit.

    D_q^i f is taken at ``probe`` and ``q * probe`` and extrapolated by one
    Richardson step; exact for polynomials of degree <= i+1.
    """
    coeffs = []
    q = P.q
    for i in range(n):
        if i == 0:
            a, b = f(probe), f(q * probe)
        else:
            a = q_derivative_n(f, i, probe, P, dps)
            b = q_derivative_n(f, i, q * probe, P, dps)
        d0 = (b - q * a) / (1.0 - q)
        coeffs.append(d0 / q_gamma(i + 1, P))
    return coeffs


def taylor_remainder(f, alpha, t, P: QParams, dps=DEFAULT_DPS):
    """I_q^alpha C D_q^alpha f (t) - f(t).

    For non-integer alpha this equals minus the q-Taylor part
    sum_{i<n} D_q^i f(0) t^i / Gamma_q(i+1).
    """
    if alpha <= 0 or float(alpha).is_integer():
        raise DomainError("taylor_remainder needs a positive non-integer order")
    inner = lambda s: caputo_derivative(f, alpha, s, P, dps=dps)
    return rl_integral(inner, alpha, t, P) - f(t)
