"""Closed-form oracle for the reference 3-state market.

The market has equiprobable states, one asset worth (4, 2, 1) at maturity
with initial price 2, and the one-parameter kernel family
xi_u = (3u, 3-9u, 6u) for u in [0, 1/3].  For a target distribution with
atoms x < y < z, the values and optimizer families of the four distributional
cost problems (maximin, convexified maximin, convexified minimax, minimax)
have closed forms that split on the sign of 2x - 3y + z.  These closed forms
are the ground truth the generic solvers are tested against.

Inputs given as int / Fraction are processed in exact rational arithmetic;
float inputs fall back to floating point with a 1e-12 regime tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

REGIME_TOL = 1e-12

REFERENCE_ASSET = (4.0, 2.0, 1.0)
REFERENCE_PRICE = 2.0


def reference_market():
    """The 3-state market instance the closed forms are derived for."""
    from .market import DiscreteMarket
    return DiscreteMarket(n=3, assets=[REFERENCE_ASSET], prices=[REFERENCE_PRICE])


def _number(v):
    if isinstance(v, Rational):
        return Fraction(v)
    return float(v)


def _sign(v, exact: bool):
    if exact:
        return (v > 0) - (v < 0)
    if abs(v) <= REGIME_TOL:
        return 0
    return 1 if v > 0 else -1


@dataclass(frozen=True)
class ThreeStateCase:
    """Sorted target atoms x < y < z plus the regime of 2x - 3y + z."""

    x: object
    y: object
    z: object

    def __post_init__(self):
        x, y, z = (_number(v) for v in (self.x, self.y, self.z))
        if not (x < y < z):
            raise ValueError("atoms must satisfy x < y < z")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in (self.x, self.y, self.z))

    @property
    def regime(self) -> str:
        s = _sign(2 * self.x - 3 * self.y + self.z, self.exact)
        return {1: "pos", 0: "zero", -1: "neg"}[s]

    def atoms(self) -> np.ndarray:
        return np.array([float(self.x), float(self.y), float(self.z)])


def kernel_vector(u):
    """Kernel xi_u = (3u, 3-9u, 6u); u in [0, 1/3] spans the closed kernel set."""
    u = _number(u)
    return (3 * u, 3 - 9 * u, 6 * u)


def kernel_parameter(xi) -> float:
    """Recover u from a kernel vector of the reference family."""
    return float(xi[0]) / 3.0


@dataclass(frozen=True)
class FourValues:
    maximin: object
    cvx_maximin: object
    cvx_minimax: object
    minimax: object

    def as_floats(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("maximin", "cvx_maximin", "cvx_minimax", "minimax")}


def optimal_values(case: ThreeStateCase) -> FourValues:
    """Closed-form optimal values of the four problems.

    The first three problems share one value: (2x+y+z)/4 when 2x-3y+z > 0,
    y when it vanishes, (2x+2y+z)/5 when it is negative.  The minimax value
    is (2x+z)/3 in the positive regime and y otherwise; all four coincide
    exactly when 2x - 3y + z = 0.
    """
    x, y, z = case.x, case.y, case.z
    regime = case.regime
    if regime == "pos":
        shared = (2 * x + y + z) / 4
        mm = (2 * x + z) / 3
    elif regime == "neg":
        shared = (2 * x + 2 * y + z) / 5
        mm = y
    else:
        shared = y
        mm = y
    return FourValues(maximin=shared, cvx_maximin=shared, cvx_minimax=shared, minimax=mm)


@dataclass(frozen=True)
class PayoffFamily:
    """Optimizer family {(base + t*step, xi_u)} for t in [0, t_max], u in [u_lo, u_hi].

    `step=None` marks a single payoff; `u_open` marks families quoted on the
    open kernel interval (their closure is still optimal).
    """

    base: tuple
    step: tuple | None
    t_max: object
    u_lo: object
    u_hi: object
    u_open: bool = False

    def payoff_at(self, t=0):
        if self.step is None:
            return np.array([float(v) for v in self.base])
        return np.array([float(b + t * s) for b, s in zip(self.base, self.step)])

    def kernels(self):
        return (np.array([float(v) for v in kernel_vector(self.u_lo)]),
                np.array([float(v) for v in kernel_vector(self.u_hi)]))


def _single(payoff, u) -> PayoffFamily:
    return PayoffFamily(base=tuple(payoff), step=None, t_max=0, u_lo=u, u_hi=u)


def optimizer_families(case: ThreeStateCase) -> dict:
    """Closed-form optimizer families of the four problems, keyed by problem tag.

    Mirrors the regime split on 2x-3y+z; the minimax problem additionally
    splits on the sign of x-3y+2z in the negative regime.  In the zero regime
    all four problems share the family {((z,y,x), xi_u)} for u in [1/5, 1/4].
    """
    x, y, z = case.x, case.y, case.z
    f15 = Fraction(1, 5) if case.exact else 0.2
    f14 = Fraction(1, 4) if case.exact else 0.25
    f13 = Fraction(1, 3) if case.exact else 1.0 / 3.0
    zero_n = 0 if case.exact else 0.0
    regime = case.regime
    out: dict[str, tuple] = {}

    if regime == "pos":
        out["maximin"] = (_single((z, y, x), f14), _single((y, z, x), f14))
        out["cvx_maximin"] = (
            PayoffFamily(base=(z, y, x), step=(-1, 1, 0), t_max=z - y, u_lo=f14, u_hi=f14),)
        out["cvx_minimax"] = (
            PayoffFamily(base=((3 * y + 3 * z - 2 * x) / 4, (2 * x + y + z) / 4, x),
                         step=None, t_max=0, u_lo=zero_n, u_hi=f13),)
        out["minimax"] = (_single((z, y, x), f13),)
    elif regime == "neg":
        out["maximin"] = (_single((z, x, y), f15), _single((z, y, x), f15))
        out["cvx_maximin"] = (
            PayoffFamily(base=(z, y, x), step=(0, -1, 1), t_max=y - x, u_lo=f15, u_hi=f15),)
        out["cvx_minimax"] = (
            PayoffFamily(base=(z, (2 * x + 2 * y + z) / 5, (3 * x + 3 * y - z) / 5),
                         step=None, t_max=0, u_lo=zero_n, u_hi=f13),)
        inner = _sign(x - 3 * y + 2 * z, case.exact)
        if inner > 0:
            out["minimax"] = (_single((z, y, x), zero_n),)
        elif inner == 0:
            out["minimax"] = (
                PayoffFamily(base=(x, y, z), step=None, t_max=0, u_lo=zero_n, u_hi=f13),
                _single((z, y, x), zero_n))
        else:
            out["minimax"] = (_single((x, y, z), zero_n), _single((z, y, x), zero_n))
    else:
        out["maximin"] = (
            _single((z, x, y), f15), _single((y, z, x), f14),
            PayoffFamily(base=(z, y, x), step=None, t_max=0, u_lo=f15, u_hi=f14))
        out["cvx_maximin"] = (
            PayoffFamily(base=(z, y, x), step=None, t_max=0, u_lo=f15, u_hi=f14, u_open=True),
            PayoffFamily(base=(z, y, x), step=(-1, 1, 0), t_max=z - y, u_lo=f14, u_hi=f14),
            PayoffFamily(base=(z, y, x), step=(0, -1, 1), t_max=y - x, u_lo=f15, u_hi=f15))
        out["cvx_minimax"] = (
            PayoffFamily(base=(z, y, x), step=None, t_max=0, u_lo=zero_n, u_hi=f13),)
        out["minimax"] = (
            PayoffFamily(base=(z, y, x), step=None, t_max=0, u_lo=zero_n, u_hi=f13),)
    return out


def perfect_ce_family(x, y):
    """Largest atom completing (x, y) to a perfectly cost-efficient target: 3y - 2x."""
    x, y = _number(x), _number(y)
    if not x < y:
        raise ValueError("requires x < y")
    return 3 * y - 2 * x


def attainability_functional(payoff):
    """Z1 - 3*Z2 + 2*Z3; zero iff the payoff is replicable in the reference market."""
    z1, z2, z3 = (_number(v) for v in payoff)
    return z1 - 3 * z2 + 2 * z3


def cross_coupling_price(case: ThreeStateCase, s, u):
    """Expected value under xi_s of the anti-monotone coupling built at xi_u.

    Five branches in u: pure assignments (z,x,y) on (0,1/5), (z,y,x) on
    (1/5,1/4), (y,z,x) on (1/4,1/3), and the equal-weight randomizations at
    the tie atoms u = 1/5 and u = 1/4.
    """
    x, y, z = case.x, case.y, case.z
    s, u = _number(s), _number(u)
    exact = case.exact and isinstance(s, Fraction) and isinstance(u, Fraction)
    f15 = Fraction(1, 5) if exact else 0.2
    f14 = Fraction(1, 4) if exact else 0.25

    def near(a, b):
        return a == b if exact else abs(a - b) <= REGIME_TOL

    if near(u, f15):
        return (x + y) / 2 + (z - (x + y) / 2) * s
    if near(u, f14):
        return (y + z) / 2 + (2 * x - y - z) * s
    if u < f15:
        return x + (-3 * x + 2 * y + z) * s
    if u < f14:
        return y + (2 * x - 3 * y + z) * s
    return z + (2 * x + y - 3 * z) * s


def kkm_interval(case: ThreeStateCase, s):
    """Closed hull of {u : cross_coupling_price(s, u) <= cross_coupling_price(u, u)}.

    These are the sets whose nonempty intersection certifies existence of a
    kernel optimal against every other kernel's coupling; each is an interval
    pinned to 1/4 (positive regime), 1/5 (negative), or spanning both (zero).
    """
    s = _number(s)
    exact = case.exact and isinstance(s, Fraction)
    f15 = Fraction(1, 5) if exact else 0.2
    f14 = Fraction(1, 4) if exact else 0.25
    if not (0 < s < Fraction(1, 3) if exact else 0 < s < 1 / 3 + REGIME_TOL):
        raise ValueError("s must lie in (0, 1/3)")
    regime = case.regime
    if regime == "pos":
        return (min(s, f14), max(s, f14))
    if regime == "neg":
        return (min(s, f15), max(s, f15))
    return (min(s, f15), max(s, f14))


def kkm_intersection(case: ThreeStateCase, grid: int = 120):
    """Intersection of the kkm intervals over a dense rational grid of s values.

    Returns {1/4} in the positive regime, {1/5} in the negative one and
    [1/5, 1/4] in the zero regime, matching the optimal-kernel set of the
    maximin problem.
    """
    exact = case.exact
    lo_best = None
    hi_best = None
    for k in range(1, grid):
        s = Fraction(k, 3 * grid) if exact else k / (3 * grid)
        if not (0 < s < (Fraction(1, 3) if exact else 1 / 3)):
            continue
        lo, hi = kkm_interval(case, s)
        lo_best = lo if lo_best is None else max(lo_best, lo)
        hi_best = hi if hi_best is None else min(hi_best, hi)
    return (lo_best, hi_best)
