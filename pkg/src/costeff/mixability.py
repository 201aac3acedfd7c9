"""Coupling bounds for sums of identically distributed variables.

For a distribution F on [0, inf) with decreasing density, the smallest
probability that an optimally coupled sum S_n = X_1 + ... + X_n falls below
a threshold s is

    m_plus_n(s) = phi_n^{-1}(s),      phi_n(t) = H_t(c_n(t)),

where H_t(x) = (n-1) F^{-1}(t + (n-1)x) + F^{-1}(1-x) on (0, (1-t)/n] and
c_n(t) is the smallest c at which the average of H_t over [c, (1-t)/n]
first dominates H_t(c).  Heavy-tailed marginals (folded Cauchy) make the
coupled average sum diverge: 1 - m_plus_n(n*M) climbs towards one as n
grows, while integrable marginals stay pinned under the Markov bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, InternalInconsistency
from .orders import DiscreteDistribution

GRID_POINTS = 1000
BISECT_TOL = 1e-12
SIMPSON_TOL = 1e-10
_LEFT_EDGE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class TailDistribution:
    """Nonnegative distribution described by its quantile function.

    `density_decreasing` is caller-asserted (no density estimation is
    attempted); the coupling bounds below are valid only under it.
    """

    name: str
    quantile: Callable
    density_decreasing: bool
    integrable: bool

    def q(self, u):
        return self.quantile(np.asarray(u, dtype=float))


def folded_cauchy() -> TailDistribution:
    """|Cauchy|: quantile tan(pi*u/2); decreasing density, not integrable."""
    return TailDistribution(name="folded_cauchy",
                            quantile=lambda u: np.tan(0.5 * np.pi * np.asarray(u, float)),
                            density_decreasing=True, integrable=False)


def uniform_01() -> TailDistribution:
    """Uniform on (0,1): identity quantile; (weakly) decreasing density."""
    return TailDistribution(name="uniform", quantile=lambda u: np.asarray(u, float),
                            density_decreasing=True, integrable=True)


def h_function(dist: TailDistribution, n: int, s: float, x) -> float:
    """H_s(x) = (n-1) F^{-1}(s + (n-1)x) + F^{-1}(1-x) on 0 < x <= (1-s)/n."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    if not 0 <= s < 1:
        raise DomainError("s must lie in [0, 1)")
    x_arr = np.asarray(x, dtype=float)
    upper = (1.0 - s) / n
    if np.any((x_arr <= 0) | (x_arr > upper * (1 + 1e-12))):
        raise DomainError(f"x must lie in (0, {upper}]")
    out = (n - 1) * dist.q(s + (n - 1) * x_arr) + dist.q(1.0 - x_arr)
    return out if out.ndim else float(out)


def _adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 48) -> float:
    """Adaptive Simpson quadrature with a Richardson acceptance test."""
    def simp(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    stack = [(a, b, fa, fm, fb, simp(a, b, fa, fm, fb), tol, 0)]
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, whole, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simp(lo, mid, flo, flm, fmid)
        right = simp(mid, hi, fmid, frm, fhi)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * eps:
            total += left + right + (left + right - whole) / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2.0, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2.0, depth + 1))
    return total


def _h_integral(dist: TailDistribution, n: int, s: float, lo: float, hi: float,
                tol: float = SIMPSON_TOL) -> float:
    """Integral of H_s over [lo, hi], splitting geometrically towards the
    singular-ish left endpoint."""
    if hi <= lo:
        return 0.0

    def f(x):
        return float((n - 1) * dist.q(s + (n - 1) * x) + dist.q(1.0 - x))

    edges = [lo]
    step = lo
    while step * 8.0 < hi:
        step *= 8.0
        edges.append(step)
    edges.append(hi)
    scale = max(1.0, abs(f(0.5 * (lo + hi))))
    return sum(_adaptive_simpson(f, a, b, tol * scale * (b - a) / (hi - lo))
               for a, b in zip(edges[:-1], edges[1:]))


class CnRoot(NamedTuple):
    c: float
    at_left_edge: bool


def c_n(dist: TailDistribution, n: int, s: float,
        grid: int = GRID_POINTS, tol: float = BISECT_TOL) -> CnRoot:
    """Smallest c in (0, (1-s)/n] where the tail average of H_s dominates H_s(c).

    psi(c) = integral of H_s over [c, b] - (b - c) H_s(c) with b = (1-s)/n;
    a coarse graded grid brackets the first sign change of psi, bisection
    refines it.  When psi >= 0 everywhere the infimum sits at the open left
    endpoint and the smallest grid value is returned with a flag.
    """
    if not dist.density_decreasing:
        raise DomainError("coupling bound requires the decreasing-density assertion")
    if not 0 <= s < 1:
        raise DomainError("s must lie in [0, 1)")
    b = (1.0 - s) / n

    # graded c grid: geometric low end, linear bulk
    n_geo = grid // 5
    geo = b * np.geomspace(_LEFT_EDGE_FLOOR, 0.05, n_geo, endpoint=False)
    lin = np.linspace(0.05 * b, b, grid - n_geo)
    cs = np.unique(np.concatenate([geo, lin]))

    # vectorized composite Simpson between consecutive grid points
    mids = 0.5 * (cs[:-1] + cs[1:])
    quarter = 0.25 * (cs[1:] - cs[:-1])
    pts = np.stack([cs[:-1], cs[:-1] + quarter, mids, cs[1:] - quarter, cs[1:]])
    hv = (n - 1) * dist.q(s + (n - 1) * pts) + dist.q(1.0 - pts)
    seg = (cs[1:] - cs[:-1]) / 12.0 * (hv[0] + 4 * hv[1] + 2 * hv[2] + 4 * hv[3] + hv[4])
    tails = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    h_at = (n - 1) * dist.q(s + (n - 1) * cs) + dist.q(1.0 - cs)
    psi = tails - (b - cs) * h_at

    nonneg = psi >= 0
    if nonneg[0]:
        return CnRoot(c=float(cs[0]), at_left_edge=True)
    idx = int(np.argmax(nonneg))
    if not nonneg[idx]:
        raise InternalInconsistency("psi never crossed zero although psi(b) = 0")

    lo, hi = float(cs[idx - 1]), float(cs[idx])

    def psi_at(c):
        h_c = float((n - 1) * dist.q(s + (n - 1) * c) + dist.q(1.0 - c))
        return _h_integral(dist, n, s, c, b) - (b - c) * h_c

    f_lo = psi_at(lo)
    for _ in range(200):
        if hi - lo <= tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        f_mid = psi_at(mid)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return CnRoot(c=0.5 * (lo + hi), at_left_edge=False)


def phi_n(dist: TailDistribution, n: int, t: float) -> float:
    """phi_n(t) = H_t(c_n(t)): threshold below which an optimally coupled sum
    falls with probability exactly t."""
    root = c_n(dist, n, t)
    return h_function(dist, n, t, max(root.c, _LEFT_EDGE_FLOOR))


def m_plus(dist: TailDistribution, n: int, s: float,
           grid: int = 101, tol: float = 1e-10) -> float:
    """Infimum over couplings of P[X_1 + ... + X_n < s].

    Inverts phi_n by a monotone bracket grid plus bisection; thresholds
    outside the reachable range clamp to 0 or 1.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    t_lo, t_hi = 1e-9, 1.0 - 1e-9
    ts = np.linspace(t_lo, t_hi, grid)
    phis = np.array([phi_n(dist, n, t) for t in ts])
    if np.any(np.diff(phis) <= 0):
        raise InternalInconsistency("phi_n is not strictly increasing on the grid")
    if s <= phis[0]:
        return 0.0
    if s >= phis[-1]:
        return 1.0
    j = int(np.searchsorted(phis, s))
    lo, hi = float(ts[j - 1]), float(ts[j])
    for _ in range(60):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if phi_n(dist, n, mid) < s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def divergence_rows(dist: TailDistribution, n_values, threshold: float) -> list:
    """Rows (n, threshold, P[coupled sum >= n*threshold]) for the divergence table."""
    rows = []
    for n in n_values:
        prob = 1.0 - m_plus(dist, int(n), float(n) * threshold)
        rows.append((int(n), float(threshold), prob))
    return rows


def markov_hull_bound(dist: DiscreteDistribution, threshold: float) -> float:
    """Uniform bound on P[|X| >= M] over convex mixtures of arrangements: E|F|/M."""
    if threshold <= 0:
        raise DomainError("threshold must be positive")
    return float(np.mean(np.abs(dist.atoms))) / threshold
