"""Signed Stieltjes measures dLambda on [0, 1]: polynomial density plus atoms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

DEFAULT_ORDER = 32


@dataclass(frozen=True)
class StieltjesMeasure:
    """dLambda(t) = (sum_j density[j] t^j) dt + sum_a mass_a delta(t - loc_a)."""

    density: tuple = ()
    atoms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "density", tuple(float(c) for c in self.density))
        atoms = tuple((float(loc), float(w)) for loc, w in self.atoms)
        locs = [loc for loc, _ in atoms]
        if any(not (0.0 <= loc <= 1.0) for loc in locs):
            raise DomainError("atom locations must lie in [0, 1]")
        if len(set(locs)) != len(locs):
            raise DomainError("atom locations must be pairwise distinct")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def zero(cls):
        return cls()

    def density_at(self, t):
        t = np.asarray(t, dtype=float)
        # np.polyval wants highest degree first
        return np.polyval(self.density[::-1], t) if self.density else np.zeros_like(t)

    def has_density(self):
        return any(c != 0.0 for c in self.density)

    def scaled(self, c):
        return StieltjesMeasure(
            tuple(c * d for d in self.density), tuple((x, c * w) for x, w in self.atoms)
        )

    def __add__(self, other):
        n = max(len(self.density), len(other.density))
        dens = [0.0] * n
        for j, c in enumerate(self.density):
            dens[j] += c
        for j, c in enumerate(other.density):
            dens[j] += c
        atoms = dict(self.atoms)
        for x, w in other.atoms:
            atoms[x] = atoms.get(x, 0.0) + w
        return StieltjesMeasure(tuple(dens), tuple(sorted(atoms.items())))


@lru_cache(maxsize=32)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def quadrature_rule(m: StieltjesMeasure, kinks=(), order=DEFAULT_ORDER):
    """Points and signed weights w_i with sum_i w_i g(x_i) ~ int g dLambda.

    Density part: Gauss-Legendre of ``order`` on each piece between the
    sorted kinks; atoms appended as (location, mass).
    """
    pts, wts = [], []
    if m.has_density():
        cuts = sorted({0.0, 1.0, *(float(k) for k in kinks if 0.0 < k < 1.0)})
        x, w = _leggauss(order)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            half = 0.5 * (hi - lo)
            xs = lo + half * (x + 1.0)
            pts.append(xs)
            wts.append(half * w * m.density_at(xs))
    for loc, mass in m.atoms:
        if mass != 0.0:
            pts.append(np.array([loc]))
            wts.append(np.array([mass]))
    if not pts:
        return np.empty(0), np.empty(0)
    return np.concatenate(pts), np.concatenate(wts)


def _eval_on(g, xs):
    try:
        vals = np.asarray(g(xs), dtype=float)
        if vals.shape == xs.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(g(float(x))) for x in xs])


def stieltjes_integrate(g, m: StieltjesMeasure, kinks=(), order=DEFAULT_ORDER):
    """int_0^1 g(t) dLambda(t)."""
    xs, ws = quadrature_rule(m, kinks, order)
    if xs.size == 0:
        return 0.0
    return float(np.dot(ws, _eval_on(g, xs)))


def total_mass(m: StieltjesMeasure):
    """Lambda(1) - Lambda(0), exact."""
    dens = sum(c / (j + 1) for j, c in enumerate(m.density))
    return dens + sum(w for _, w in m.atoms)


def measure_is_zero(m: StieltjesMeasure):
    return all(c == 0.0 for c in m.density) and all(w == 0.0 for _, w in m.atoms)
