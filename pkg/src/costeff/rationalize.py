"""Concave utilities that rationalize cost-efficient payoffs.

A perfectly cost-efficient payoff with distribution F and optimal kernel
xi* solves the expected-utility problem for the utility whose marginal is
the composed quantile  u'(y) = F_{xi*}^{-1}(1 - F(y)).  With finitely many
atoms this u is piecewise linear: the slope just left of the k-th ascending
atom is the k-th largest kernel value, so slopes are automatically positive
and nonincreasing exactly when the kernel is a valid coupling partner.

The module also carries the closed-form expected-utility solutions of the
reference 3-state market (log, exponential, power, generic concave via
golden section) and the quadratic objective whose critical portfolio fails
perfect cost-efficiency.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MergedAtoms, NonconcaveResult
from .market import DiscreteMarket, build_kernel_polytope, is_attainable, superhedge_price
from .orders import DiscreteDistribution, distribution_of
from .solvers import check_perfect_ce

GOLDEN_TOL = 1e-12
VERIFY_GAP_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class UtilitySpline:
    """Increasing concave piecewise-linear utility.

    ``slopes[k]`` applies on the segment ending at ``knots[k]`` (and below
    the first knot); beyond the last knot the final slope extrapolates, so
    marginal utility is a nonincreasing step function constant outside the
    knot range.  ``values[k]`` = u(knots[k]) with u(anchor) = 0.
    """

    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    anchor: float

    def __post_init__(self):
        for name in ("knots", "values", "slopes"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, x, side="left"), 0, len(self.knots) - 1)
        base = self.values[idx]
        below = x <= self.knots[idx]
        out = np.where(below,
                       base - self.slopes[idx] * (self.knots[idx] - x),
                       base + self.slopes[-1] * (x - self.knots[idx]))
        return out if out.ndim else float(out)

    def marginal(self, x):
        """Right-continuous marginal utility (left-slope at knots)."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, x, side="left"), 0, len(self.knots) - 1)
        out = np.where(x > self.knots[-1], self.slopes[-1], self.slopes[idx])
        return out if out.ndim else float(out)


def build_utility(dist: DiscreteDistribution, xi_star, anchor: float = None) -> UtilitySpline:
    """Rationalizing utility from a target distribution and its optimal kernel.

    Slopes are the kernel values sorted descending, one per ascending atom;
    u is normalized to vanish at `anchor` (default: the smallest atom).
    Raises NonconcaveResult when a slope is not strictly positive (a boundary
    kernel cannot rationalize: the utility would fail strict monotonicity).
    Duplicate atoms trigger a MergedAtoms warning since neighbouring slopes
    then tie across a zero-length segment.
    """
    xi = np.sort(np.asarray(xi_star, dtype=float).ravel())[::-1]
    atoms = dist.atoms
    if xi.shape[0] != atoms.shape[0]:
        raise ValueError("kernel length must match the number of atoms")
    if np.any(np.diff(atoms) <= 0):
        warnings.warn("atoms are not distinct; utility slopes may tie", MergedAtoms)
    if xi[-1] <= 0:
        raise NonconcaveResult("kernel has a nonpositive coordinate; "
                               "the composed marginal utility is not strictly increasing")
    anchor = float(atoms[0]) if anchor is None else float(anchor)
    knots = atoms

    # u(x) integrates the step marginal (slope j on the segment ending at
    # knot j, extreme slopes outside the knot range) from the anchor.
    def _u_at(x):
        total = 0.0
        lo, hi = (anchor, x) if x >= anchor else (x, anchor)
        sgn = 1.0 if x >= anchor else -1.0
        edges = np.concatenate([[lo], knots[(knots > lo) & (knots < hi)], [hi]])
        for a, b in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (a + b)
            k = np.searchsorted(knots, mid, side="left")
            slope = xi[min(k, len(xi) - 1)]
            total += slope * (b - a)
        return sgn * total

    values = np.array([_u_at(k) for k in knots])
    return UtilitySpline(knots=knots, values=values, slopes=xi, anchor=anchor)


def _concave_1d_max(g, breakpoints):
    """Maximize a concave piecewise-linear function given its breakpoints."""
    pts = np.unique(np.asarray(breakpoints, dtype=float))
    vals = np.array([g(t) for t in pts])
    i = int(np.argmax(vals))
    # detect unbounded flats beyond the extreme breakpoints
    span = max(1.0, pts[-1] - pts[0])
    if i == 0 and g(pts[0] - span) > vals[0] + 1e-12:
        return -np.inf, None
    if i == len(pts) - 1 and g(pts[-1] + span) > vals[-1] + 1e-12:
        return np.inf, None
    return float(pts[i]), float(vals[i])


def verify_rationalization(market: DiscreteMarket, dist: DiscreteDistribution,
                           z_star, utility: UtilitySpline, x0: float,
                           gap_tol: float = VERIFY_GAP_TOL) -> bool:
    """True iff z_star maximizes mean utility over attainable payoffs of cost x0.

    The candidate must itself be attainable at cost x0 (within tolerance).
    For a single asset the concave piecewise-linear objective is maximized
    exactly over its breakpoints in the holding; for several assets a coarse
    grid with local refinement is used.
    """
    z_star = np.asarray(z_star, dtype=float).ravel()
    polytope = build_kernel_polytope(market)
    att = is_attainable(market, z_star, polytope)
    if not att.attainable:
        return False
    cost = att.cash + att.holdings @ market.prices
    if abs(cost - x0) > 1e-7 * max(1.0, abs(x0)):
        return False

    target = float(market.probs @ utility(z_star))

    deltas = market.assets - market.prices[:, None]  # payoff of 1 unit funded by cash

    if market.d == 1:
        delta = deltas[0]

        def g(theta):
            return float(market.probs @ utility(x0 + theta * delta))

        bps = [0.0]
        for knot in utility.knots:
            for dlt in delta:
                if abs(dlt) > 1e-12:
                    bps.append((knot - x0) / dlt)
        _, best = _concave_1d_max(g, bps)
        if best is None:
            # objective unbounded along theta; nothing attains the supremum
            return False
        return target >= best - gap_tol
    # multi-asset: grid + local refinement
    scale = max(1.0, float(np.abs(utility.knots).max()), abs(x0))
    best = -np.inf
    center = np.zeros(market.d)
    width = 4.0 * scale
    for _ in range(24):
        axes = [np.linspace(c - width, c + width, 9) for c in center]
        grids = np.meshgrid(*axes, indexing="ij")
        thetas = np.stack([g.ravel() for g in grids], axis=1)
        vals = np.array([float(market.probs @ utility(x0 + th @ deltas)) for th in thetas])
        j = int(np.argmax(vals))
        best = max(best, float(vals[j]))
        center = thetas[j]
        width /= 2.5
    return target >= best - gap_tol


def _golden_section_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * max(1.0, abs(a), abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def trinomial_eu_solve(market: DiscreteMarket, x0: float, utility) -> np.ndarray:
    """Expected-utility optimum in the reference 3-state market.

    Every perfectly cost-efficient candidate at budget x0 has the form
    (3*x0 - 2*w, x0, w), so the problem reduces to maximizing
    u(3*x0 - 2*w) + u(w) in one variable.  `utility` is "log", "exp",
    ("power", alpha) with alpha < 1, alpha != 0, or a concave callable
    (solved by golden section; the stationary point satisfies
    u'(w) = 2 u'(3*x0 - 2*w)).
    """
    if x0 <= 0:
        raise DomainError("initial budget must be positive")
    if isinstance(utility, str) and utility == "log":
        w = 0.75 * x0
    elif isinstance(utility, str) and utility == "exp":
        w = x0 - math.log(2.0) / 3.0
    elif isinstance(utility, tuple) and utility[0] == "power":
        alpha = float(utility[1])
        if alpha >= 1 or alpha == 0:
            raise DomainError("power exponent must satisfy alpha < 1, alpha != 0")
        beta = alpha / (alpha - 1.0)
        w = 3.0 * x0 * 2.0 ** (beta - 1.0) / (1.0 + 2.0 ** beta)
    elif callable(utility):
        eps = 1e-12 * x0

        def obj(w):
            return utility(3 * x0 - 2 * w) + utility(w)

        w = _golden_section_max(obj, eps, x0 - eps)
    else:
        raise DomainError(f"unsupported utility spec: {utility!r}")

    payoff = np.array([3 * x0 - 2 * w, x0, w])
    att = is_attainable(market, payoff, opt_tol=1e-7)
    if not att.attainable:
        raise DomainError("market is not the reference 3-state instance: "
                          "the reduced-form optimum is not attainable in it")
    return payoff


def quadratic_counterexample(market: DiscreteMarket, x0: float):
    """Critical portfolio of the quadratic objective E[X^2] at budget x0.

    Over attainable payoffs x0 + theta * (S - price), the quadratic
    objective has a unique stationary holding theta* = -x0*E[D]/E[D^2]
    (D the funded asset payoff); its payoff is nonnegative but fails
    perfect cost-efficiency, exhibiting a preference whose optimizer a
    diversification-loving investor would reject.  Returns
    (payoff, E[payoff^2], perfect-cost-efficiency verdict).
    """
    if x0 <= 0:
        raise DomainError("initial budget must be positive")
    if market.d != 1:
        raise DomainError("the quadratic example uses the single-asset reference market")
    delta = market.assets[0] - market.prices[0]
    theta = -x0 * market.expectation(delta) / market.expectation(delta ** 2)
    payoff = x0 + theta * delta
    if payoff.min() < 0:
        raise DomainError("stationary payoff leaves the nonnegative orthant")
    value = float(market.expectation(payoff ** 2))
    verdict = check_perfect_ce(market, distribution_of(payoff))
    return payoff, value, verdict.is_perfect
