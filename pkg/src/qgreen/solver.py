"""Cone fixed-point iteration x_n = lambda * T x_{n-1} for the boundary value problem.

T x is the Green's integral of y = h f(., x).  Its fractional integrals
are Jackson sums anchored at their own endpoints, so iterates live on a
union of q-lattices: {q^k}, {zeta_i q^k} and {s q^k} for every quadrature
node s of dLambda.  T maps functions on that union to functions on it, so
the iteration is exact there; any other point is reached by solving the
same equation on its own lattice with the converged constants.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolation, MonotonicityViolation, NegativeInput
from .greenfn import compute_constants, green_coefficients, require_hypotheses
from .measure import DEFAULT_ORDER, quadrature_rule
from .qkernel import QLattice, kernel_weights, q_gamma

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
LATTICE_RESOLUTION = 1e-14
LATTICE_CAP = 200
POLISH_TOL = 1e-14


class SeedGrid:
    """Lattices s q^k (k = 0..K) for each seed s, plus the point 0."""

    def __init__(self, seeds, q, K):
        self.seeds = np.asarray(seeds, dtype=float)
        self.q = q
        self.K = K
        self.nodes = self.seeds[:, None] * q ** np.arange(K + 1)

    @property
    def base(self):
        """Nodes of the base lattice {q^k} (seed 1 is always row 0)."""
        return self.nodes[0]

    def lattice(self):
        return QLattice(self.q, self.K)


class QGridFunction:
    """Values on a SeedGrid (row 0 is the base lattice) plus the value at 0."""

    def __init__(self, grid: SeedGrid, values, zero_value, evaluator=None):
        self.grid = grid
        self.values = np.asarray(values, dtype=float)
        self.zero_value = float(zero_value)
        self.evaluator = evaluator

    @property
    def base_values(self):
        return np.append(self.values[0], self.zero_value)

    @property
    def base_nodes(self):
        return np.append(self.grid.base, 0.0)

    def sup_norm(self):
        return float(max(np.max(np.abs(self.values)), abs(self.zero_value)))

    def __sub__(self, other):
        return QGridFunction(self.grid, self.values - other.values, self.zero_value - other.zero_value)

    def __mul__(self, c):
        return QGridFunction(self.grid, c * self.values, c * self.zero_value)

    __rmul__ = __mul__

    def __call__(self, t):
        if self.evaluator is None:
            raise ValueError("no continuous extension attached")
        return self.evaluator(t)


class GreenOperator:
    """T restricted to a SeedGrid, with all lattice weights precomputed."""

    def __init__(
        self, spec, gc=None, resolution=LATTICE_RESOLUTION, cap=LATTICE_CAP, quad_order=DEFAULT_ORDER
    ):
        self.spec = spec
        self.gc = gc or compute_constants(spec)
        q = spec.q
        K = QLattice.for_resolution(q, resolution, cap).K
        xs, ws = quadrature_rule(spec.measure, order=quad_order)
        keep = xs > 0
        self.quad_w = ws[keep]
        seeds = [1.0, *spec.zetas, *xs[keep]]
        self.grid = SeedGrid(seeds, q, K)
        m2 = len(spec.zetas)
        self.idx_z = np.arange(1, 1 + m2)
        self.idx_quad = np.arange(1 + m2, len(seeds))
        N = K + 1
        self.N = N
        self.M_a = self._toeplitz(spec.alpha, N)
        self.row_a1 = kernel_weights(spec.alpha - 1.0, spec.qp, N) * q ** np.arange(N)
        self.c_a = (1.0 - q) / q_gamma(spec.alpha, spec.qp)
        self.c_a1 = (1.0 - q) / q_gamma(spec.alpha - 1.0, spec.qp)
        self.h_vals = self._h(self.grid.nodes)

    def _toeplitz(self, order, N):
        q = self.spec.q
        w = kernel_weights(order, self.spec.qp, N) * q ** np.arange(N)
        M = np.zeros((N, N))
        for k in range(N):
            M[k, k:] = w[: N - k]
        return M

    def _h(self, nodes):
        h = self.spec.h
        return np.asarray(h(nodes), dtype=float) if h is not None else np.ones_like(nodes)

    def source(self, nodes, values, h_vals=None):
        """y = h(t) f(t, x(t)) at the given nodes."""
        hv = self._h(nodes) if h_vals is None else h_vals
        return hv * np.asarray(self.spec.f(nodes, values), dtype=float)

    def frac_a(self, Y, nodes):
        """I^alpha Y at every node of each row (rows are lattices)."""
        return nodes**self.spec.alpha * self.c_a * (Y @ self.M_a.T)

    def coefficients(self, Y):
        """(c1, d) of the Green image of source samples Y on the grid."""
        spec, gc = self.spec, self.gc
        seeds = self.grid.seeds
        a = spec.alpha
        I1 = seeds ** (a - 1.0) * self.c_a1 * (Y @ self.row_a1)  # I^{alpha-1} at row heads
        Ia_head = seeds**a * self.c_a * (Y @ self.M_a[0])
        lam_Ia = float(np.dot(self.quad_w, Ia_head[self.idx_quad])) if self.idx_quad.size else 0.0
        return green_coefficients(
            spec, gc, float(I1[0]), I1[self.idx_z], Ia_head[self.idx_z], lam_Ia
        )

    def apply(self, x: QGridFunction, lam=1.0):
        """lam * T x on the grid, returned with the constants (c1, d) used."""
        if np.min(x.values) < -1e-12:
            raise NegativeInput(f"iterate dips to {np.min(x.values):.3e} < 0")
        nodes = self.grid.nodes
        Y = lam * self.source(nodes, np.maximum(x.values, 0.0), self.h_vals)
        c1, d = self.coefficients(Y)
        vals = c1 * (nodes + self.gc.cshift) - d - self.frac_a(Y, nodes)
        return QGridFunction(self.grid, vals, c1 * self.gc.cshift - d), (c1, d)


def apply_T(x: QGridFunction, spec, gc=None, op: GreenOperator | None = None):
    op = op or GreenOperator(spec, gc)
    out, _ = op.apply(x, 1.0)
    return out


def cone_seed(spec, gc=None, op: GreenOperator | None = None):
    """p(t) = (t + cshift) / sigma on the grid."""
    op = op or GreenOperator(spec, gc)
    gc = op.gc
    p = lambda t: (np.asarray(t, float) + gc.cshift) / gc.sigma
    return QGridFunction(op.grid, p(op.grid.nodes), gc.cshift / gc.sigma, evaluator=p)


class SolutionEvaluator:
    """x*(t) anywhere in [0, 1] from the converged constants (c1, d).

    For a query t, x* on {t q^k} solves x = c1 (s + cshift) - d - I^alpha y
    with y = lam h f(s, x); that Volterra-type equation is iterated to
    rounding.  Lattices are cached by anchor so nearby queries t q^j reuse
    one solve.
    """

    def __init__(self, op: GreenOperator, lam, c1, d, depth=None, warm=None):
        self.op = op
        self.lam = lam
        self.c1 = c1
        self.d = d
        q = op.spec.q
        extra = int(math.ceil(math.log(1e-18) / math.log(q)))
        self.depth = depth or (op.N + extra)
        self.M = op._toeplitz(op.spec.alpha, self.depth)
        self._cache = {}
        self._warm = warm

    @property
    def value_at_zero(self):
        return self.c1 * self.op.gc.cshift - self.d

    def poly_part(self, t):
        return self.c1 * (np.asarray(t, float) + self.op.gc.cshift) - self.d

    def _lookup(self, t):
        q = self.op.spec.q
        for anchor, (vals, rem) in self._cache.items():
            if t > anchor * (1 + 1e-12):
                continue
            k = int(round(math.log(t / anchor) / math.log(q)))
            if 0 <= k < self.depth // 2 and abs(t - anchor * q**k) <= 1e-12 * t:
                return vals[k], rem[k]
        return None

    def _solve(self, t):
        op = self.op
        spec = op.spec
        nodes = t * spec.q ** np.arange(self.depth)
        hv = op._h(nodes)
        poly = self.poly_part(nodes)
        v = poly.copy()
        scale = nodes**spec.alpha * op.c_a
        for _ in range(500):
            Y = self.lam * hv * np.asarray(spec.f(nodes, np.maximum(v, 0.0)), dtype=float)
            rem = -scale * (self.M @ Y)
            nv = poly + rem
            if np.max(np.abs(nv - v)) <= 1e-16 * max(1.0, np.max(np.abs(nv))):
                v = nv
                break
            v = nv
        self._cache[t] = (v, rem)
        return v[0], rem[0]

    def _point(self, t):
        t = float(t)
        if t == 0.0:
            return self.value_at_zero, 0.0
        hit = self._lookup(t)
        return hit if hit is not None else self._solve(t)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.vectorize(lambda s: self._point(s)[0], otypes=[float])(t_arr)
        return float(out) if out.ndim == 0 else out

    def remainder(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.vectorize(lambda s: self._point(s)[1], otypes=[float])(t_arr)
        return float(out) if out.ndim == 0 else out


@dataclass
class SolveReport:
    lam: float
    converged: bool
    n_iters: int
    sup_changes: list
    solution: QGridFunction
    iterates_kept: list = field(default_factory=list)
    cone_certificate: tuple = (math.nan, math.nan)
    fixed_point_residual: float = math.nan
    monotone: bool | None = None
    residuals: object = None
    polish_iters: int = 0

    @property
    def norm(self):
        return self.solution.sup_norm()

    def summary(self):
        out = {
            "lambda": self.lam,
            "converged": self.converged,
            "n_iters": self.n_iters,
            "polish_iters": self.polish_iters,
            "final_sup_change": self.sup_changes[-1] if self.sup_changes else None,
            "sup_norm": self.norm,
            "cone_certificate": {"mu_hat": self.cone_certificate[0], "nu_hat": self.cone_certificate[1]},
            "fixed_point_residual": self.fixed_point_residual,
            "monotone_iterates": self.monotone,
        }
        if self.residuals is not None:
            out["residuals"] = self.residuals.to_dict()
        return out


def _initial(x0, op, p):
    if x0 is None:
        return p
    if isinstance(x0, QGridFunction):
        return x0
    if callable(x0):
        return QGridFunction(op.grid, x0(op.grid.nodes), float(x0(0.0)))
    # scalar multiple of the cone seed
    return float(x0) * p


def solve(
    spec,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    x0=None,
    check_hypotheses=True,
    residuals=False,
    keep=2,
    op: GreenOperator | None = None,
):
    """Iterate x_n = lambda T x_{n-1} from x0 (default p) until the sup change < tol."""
    if check_hypotheses:
        require_hypotheses(spec)
    op = op or GreenOperator(spec)
    gc = op.gc
    if gc.rho <= 0:
        raise HypothesisViolation(f"rho = {gc.rho} must be positive")
    p = cone_seed(spec, gc, op)
    x = _initial(x0, op, p)
    first = [x]
    changes = []
    signs = set()
    converged = False
    n = 0
    for n in range(1, max_iter + 1):
        nx, _ = op.apply(x, spec.lam)
        diff = nx - x
        changes.append(diff.sup_norm())
        lo, hi = float(np.min(diff.values)), float(np.max(diff.values))
        signs.add("up" if lo >= -1e-14 else "down" if hi <= 1e-14 else "mixed")
        if len(first) < keep:
            first.append(nx)
        x = nx
        if changes[-1] < tol:
            converged = True
            break
    log.debug("lambda=%g: %d iterations, last change %.3e", spec.lam, n, changes[-1])
    polish = 0
    if converged:
        # drive the stored iterate to rounding so the evaluator matches it on the grid
        for polish in range(1, 60):
            nx, _ = op.apply(x, spec.lam)
            step = (nx - x).sup_norm()
            x = nx
            if step < POLISH_TOL * max(1.0, x.sup_norm()):
                break
    settled, (c1, d) = op.apply(x, spec.lam)
    fp_res = (settled - x).sup_norm()
    x.evaluator = SolutionEvaluator(op, spec.lam, c1, d)
    pv = p.values
    ratio = x.values[pv > 0] / pv[pv > 0]
    if p.zero_value > 0:
        ratio = np.append(ratio, x.zero_value / p.zero_value)
    cert = (float(ratio.min()), float(ratio.max()))
    report = SolveReport(
        lam=spec.lam,
        converged=converged,
        n_iters=n,
        sup_changes=changes,
        solution=x,
        iterates_kept=first + [x],
        cone_certificate=cert,
        fixed_point_residual=fp_res,
        monotone=len(signs - {"mixed"}) == 1 and "mixed" not in signs,
        polish_iters=polish,
    )
    if residuals:
        from .verify import check_residuals

        report.residuals = check_residuals(x.evaluator, spec, gc)
    return report


@dataclass
class SweepReport:
    lambdas: list
    reports: list
    norms: list
    ordering_ok: list  # pairwise, consecutive lambdas
    norms_increasing: bool

    @property
    def monotone(self):
        return all(self.ordering_ok) and self.norms_increasing

    @property
    def violations(self):
        return [
            (self.lambdas[i], self.lambdas[i + 1])
            for i, ok in enumerate(self.ordering_ok)
            if not ok
        ]


def lambda_sweep(spec, lambdas, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, slack=1e-8):
    """Solve for each lambda; check x*_{l1} <= x*_{l2} + slack and growing sup-norms."""
    lambdas = [float(v) for v in lambdas]
    if any(v <= 0 for v in lambdas):
        raise ValueError("lambdas must be positive")
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly increasing")
    require_hypotheses(spec)
    op = GreenOperator(spec)
    reports = [
        solve(spec.with_lambda(v), tol, max_iter, check_hypotheses=False, op=op) for v in lambdas
    ]
    norms = [r.norm for r in reports]
    ordering = []
    for a, b in zip(reports, reports[1:]):
        xa, xb = a.solution, b.solution
        ok = bool(np.all(xa.values <= xb.values + slack)) and xa.zero_value <= xb.zero_value + slack
        ordering.append(ok)
    increasing = all(nb > na + tol for na, nb in zip(norms, norms[1:]))
    if not (all(ordering) and increasing):
        warnings.warn(
            MonotonicityViolation(f"lambda ordering {ordering}, norms {norms}"), stacklevel=2
        )
    return SweepReport(lambdas, reports, norms, ordering, increasing)
