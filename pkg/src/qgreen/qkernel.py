"""q-calculus primitives on the geometric lattice {t q^k}.

Every infinite product or series here is truncated once the next factor
(or term) changes the result by less than ``QParams.trunc_tol`` in absolute
terms; running out of ``max_terms`` first raises ``TruncationNotConverged``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, TruncationNotConverged

DEFAULT_TRUNC_TOL = 1e-14
DEFAULT_MAX_TERMS = 10_000


@dataclass(frozen=True)
class QParams:
    q: float
    trunc_tol: float = DEFAULT_TRUNC_TOL
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise DomainError(f"q must lie in (0, 1), got {self.q}")
        if not self.trunc_tol > 0:
            raise DomainError(f"trunc_tol must be positive, got {self.trunc_tol}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


@dataclass(frozen=True)
class QLattice:
    """Nodes ``scale * q**k`` for k = 0..K, followed by the point 0."""

    q: float
    K: int
    scale: float = 1.0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise DomainError(f"q must lie in (0, 1), got {self.q}")
        if self.K < 0:
            raise DomainError("K must be nonnegative")
        pts = self.scale * self.q ** np.arange(self.K + 1, dtype=float)
        nodes = np.append(pts, 0.0)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def for_resolution(cls, q, resolution=1e-12, cap=200, scale=1.0):
        """Shallowest lattice whose deepest positive node is below ``resolution``."""
        K = int(math.ceil(math.log(resolution / scale) / math.log(q)))
        K = max(K, 0)
        if scale * q**K >= resolution:
            K += 1
        return cls(q, min(K, cap), scale)

    @property
    def positive(self):
        return self.nodes[:-1]

    def __len__(self):
        return self.K + 2


def q_bracket(a, P: QParams):
    q = P.q
    return (1.0 - q**a) / (1.0 - q)


def _terms_needed(amax, P: QParams):
    """Factors (1 - a q^j) needed before |a q^j| drops under trunc_tol."""
    if amax < P.trunc_tol:
        return 0
    n = int(math.ceil(math.log(P.trunc_tol / amax) / math.log(P.q)))
    n = max(n, 0) + 1
    if n > P.max_terms:
        raise TruncationNotConverged(
            f"infinite q-product needs {n} factors, max_terms={P.max_terms}"
        )
    return n


def q_pochhammer(a, P: QParams, ell=math.inf):
    """(a; q)_ell for integer ell >= 0 or ell = inf."""
    if ell != math.inf:
        ell = int(ell)
        if ell < 0:
            raise DomainError("ell must be nonnegative")
        out = 1.0
        for j in range(ell):
            out *= 1.0 - a * P.q**j
        return out
    return float(_qpoch_inf(np.asarray(a, dtype=float), P))


def _qpoch_inf(a: np.ndarray, P: QParams):
    n = _terms_needed(float(np.max(np.abs(a))) if a.size else 0.0, P)
    if n == 0:
        return np.ones_like(a)
    qj = P.q ** np.arange(n, dtype=float)
    return np.prod(1.0 - a[..., None] * qj, axis=-1)


def q_power_int(a, b, ell, P: QParams):
    """(a - b)^(ell) = prod_{j<ell} (a - b q^j)."""
    ell = int(ell)
    if ell < 0:
        raise DomainError("ell must be a nonnegative integer")
    out = 1.0
    for j in range(ell):
        out *= a - b * P.q**j
    return out


def q_power_frac(a, b, alpha, P: QParams):
    """(a - b)^(alpha) for real alpha, 0 <= b <= a.

    Uses a^alpha (b/a; q)_inf / (q^alpha b/a; q)_inf. Accepts arrays for
    ``a`` and ``b`` (broadcast); returns a float for scalar input.
    """
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise DomainError("q-power needs a >= 0 and b >= 0")
    slack = 1e-14 * np.maximum(a_arr, 1e-300)
    if np.any(b_arr > a_arr + slack):
        raise DomainError("q-power needs b <= a")
    out = np.empty(a_arr.shape, dtype=float)
    degenerate = np.isclose(b_arr, a_arr, rtol=1e-14, atol=0.0)
    if np.any(degenerate):
        if alpha > 0:
            out[degenerate] = 0.0
        elif alpha == 0:
            out[degenerate] = 1.0
        else:
            raise DomainError("(a - a)^(alpha) diverges for alpha < 0")
    live = ~degenerate
    if np.any(live):
        av, bv = a_arr[live], b_arr[live]
        x = bv / av
        num = _qpoch_inf(x, P)
        den = _qpoch_inf(P.q**alpha * x, P)
        out[live] = av**alpha * num / den
    if out.ndim == 0:
        return float(out)
    return out


def q_gamma(x, P: QParams):
    """Gamma_q(x) = (q;q)_inf / (q^x;q)_inf * (1-q)^(1-x)."""
    if x <= 0 and float(x).is_integer():
        raise DomainError(f"Gamma_q has a pole at {x}")
    return _q_gamma_cached(float(x), P.q, P.trunc_tol, P.max_terms)


@lru_cache(maxsize=4096)
def _q_gamma_cached(x, q, tol, max_terms):
    # log space: (q;q)_inf underflows long before q reaches 0.999
    P = QParams(q, tol, max_terms)
    s_num, l_num = _log_qpoch_inf(q, P)
    s_den, l_den = _log_qpoch_inf(q**x, P)
    return float(s_num * s_den * math.exp(l_num - l_den + (1.0 - x) * math.log1p(-q)))


def _log_qpoch_inf(a, P: QParams):
    """(sign, log|.|) of (a; q)_inf."""
    n = _terms_needed(abs(a), P)
    if n == 0:
        return 1.0, 0.0
    factors = 1.0 - a * P.q ** np.arange(n, dtype=float)
    sign = -1.0 if np.count_nonzero(factors < 0) % 2 else 1.0
    return sign, float(np.sum(np.log(np.abs(factors))))


def jackson_integral(f, t, P: QParams):
    """t (1-q) sum_k q^k f(t q^k); f is never evaluated at 0."""
    if not (0.0 < t <= 1.0):
        if t == 0.0:
            return 0.0
        raise DomainError(f"t must lie in (0, 1], got {t}")
    q = P.q
    total = 0.0
    prev_small = False
    qk = 1.0
    for k in range(P.max_terms):
        val = f(t * qk)
        term = t * qk * val
        total += term
        # after the (1-q) factor the remaining tail is about q * |term|
        small = abs(term) < P.trunc_tol
        if small and prev_small:
            return (1.0 - q) * total
        prev_small = small
        qk *= q
    raise TruncationNotConverged(
        f"Jackson sum not below {P.trunc_tol} after {P.max_terms} terms"
    )


def q_derivative(f, t, P: QParams):
    """(f(t) - f(qt)) / ((1-q) t)."""
    if t == 0:
        raise DomainError("first-order q-derivative is undefined at t = 0")
    return (f(t) - f(P.q * t)) / ((1.0 - P.q) * t)


@lru_cache(maxsize=256)
def _kernel_weights(order, q, n, tol, max_terms):
    P = QParams(q, tol, max_terms)
    e = order - 1.0
    w = np.empty(n, dtype=float)
    w[0] = q_power_frac(1.0, q, e, P)
    for k in range(1, n):
        w[k] = w[k - 1] * (1.0 - q ** (e + k)) / (1.0 - q**k)
    w.setflags(write=False)
    return w


def kernel_weights(order, P: QParams, n):
    """w_k = (1 - q^{k+1})^(order-1), k = 0..n-1.

    These are the Riemann-Liouville kernel values on a lattice: for
    tau = t q^k, (t - q tau)^(order-1) = t^(order-1) w_k.
    """
    return _kernel_weights(float(order), P.q, int(n), P.trunc_tol, P.max_terms)


def kernel_weight_total(order, P: QParams):
    """sum_k q^k w_k over the full lattice = 1 / ((1-q) [order]_q)."""
    return 1.0 / ((1.0 - P.q) * q_bracket(order, P))
