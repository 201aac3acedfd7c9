"""Finite-state market model: pricing-kernel polytope, superhedging, attainability.

A market has n states (equiprobable unless explicit probabilities are given),
d traded assets with terminal payoff vectors and initial prices, and a
riskless asset bearing no interest.  A pricing kernel is a vector xi >= 0
with E[xi] = 1 and E[xi * S_k] = price_k for every asset k; strictly positive
kernels correspond to equivalent martingale measures, and their closure is a
polytope whose vertices are enumerated exactly.  The superhedging price of a
claim Z is sup over kernels of E[xi Z], attained at a polytope vertex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._lp import enumerate_vertices, independent_rows, solve_lp
from .errors import ArbitrageError, DegenerateMarket, InternalInconsistency

FEAS_TOL = 1e-10
OPT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteMarket:
    """One-period market on n states with d static assets and zero interest."""

    n: int
    assets: np.ndarray   # shape (d, n), terminal values per asset
    prices: np.ndarray   # shape (d,), initial prices
    probs: np.ndarray = None  # shape (n,), defaults to equiprobable

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("market needs at least two states")
        assets = np.array(np.atleast_2d(np.asarray(self.assets, dtype=float)), copy=True)
        prices = np.array(np.asarray(self.prices, dtype=float).ravel(), copy=True)
        if assets.shape[1] != self.n:
            raise ValueError(f"asset vectors must have length n={self.n}")
        if prices.shape[0] != assets.shape[0]:
            raise ValueError("one initial price per asset is required")
        probs = self.probs
        if probs is None:
            probs = np.full(self.n, 1.0 / self.n)
        else:
            probs = np.array(np.asarray(probs, dtype=float).ravel(), copy=True)
            if probs.shape[0] != self.n:
                raise ValueError("probs must have length n")
            if probs.min() <= 0 or abs(probs.sum() - 1.0) > 1e-12:
                raise ValueError("probs must be strictly positive and sum to 1")
        for name, arr in (("assets", assets), ("prices", prices), ("probs", probs)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return self.assets.shape[0]

    @property
    def is_equiprobable(self) -> bool:
        return bool(np.max(np.abs(self.probs - 1.0 / self.n)) < 1e-12)

    def expectation(self, values) -> float:
        return float(self.probs @ np.asarray(values, dtype=float))

    def kernel_price(self, xi, payoff) -> float:
        """E[xi * Z] under the state probabilities."""
        return float(self.probs @ (np.asarray(xi, float) * np.asarray(payoff, float)))


def market_from_dict(data: dict) -> DiscreteMarket:
    return DiscreteMarket(n=int(data["n"]), assets=data["assets"],
                          prices=data["prices"], probs=data.get("probs"))


def market_to_dict(market: DiscreteMarket) -> dict:
    out = {
        "n": market.n,
        "assets": [list(row) for row in market.assets.tolist()],
        "prices": list(market.prices.tolist()),
    }
    if not market.is_equiprobable:
        out["probs"] = list(market.probs.tolist())
    return out


def load_market(path) -> DiscreteMarket:
    with open(path, "r", encoding="utf-8") as fh:
        return market_from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class KernelPolytope:
    """H-description and enumerated vertices of the closed pricing-kernel set.

    Equalities encode E[xi] = 1 and E[xi * S_k] = price_k; the closure adds
    xi >= 0.  `interior_flags[i]` marks vertices that are strictly positive,
    i.e. genuine equivalent-martingale kernels rather than boundary limits.
    """

    a_eq: np.ndarray
    b_eq: np.ndarray
    vertices: np.ndarray        # shape (m, n)
    interior_flags: np.ndarray  # shape (m,), bool
    strict_center: np.ndarray   # feasible kernel maximizing the min coordinate
    min_coordinate: float       # optimal value of that strict-feasibility LP
    feas_tol: float = FEAS_TOL

    @property
    def n(self) -> int:
        return self.a_eq.shape[1]

    def contains(self, xi, tol: float = None) -> bool:
        tol = self.feas_tol if tol is None else tol
        xi = np.asarray(xi, dtype=float)
        scale = max(1.0, float(np.abs(self.b_eq).max()))
        return bool(xi.min() >= -tol and
                    np.max(np.abs(self.a_eq @ xi - self.b_eq)) <= 1e2 * tol * scale)


def build_kernel_polytope(market: DiscreteMarket, feas_tol: float = FEAS_TOL) -> KernelPolytope:
    """Assemble the kernel equality system, enumerate vertices, check no-arbitrage.

    Raises DegenerateMarket for an inconsistent equality system and
    ArbitrageError when no strictly positive kernel exists (the
    strict-feasibility LP maximizes the minimum kernel coordinate; a positive
    optimum certifies an equivalent martingale measure).
    """
    n, d = market.n, market.d
    a_eq = np.vstack([market.probs[None, :], market.probs[None, :] * market.assets])
    b_eq = np.concatenate([[1.0], market.prices])

    _, _, consistent = independent_rows(a_eq, b_eq)
    if not consistent:
        raise DegenerateMarket("pricing equalities are inconsistent; "
                               "redundant assets carry conflicting prices")

    # max eps s.t. a_eq @ xi = b_eq, xi_i - eps >= 0, xi >= 0
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_eq_lp = np.hstack([a_eq, np.zeros((a_eq.shape[0], 1))])
    a_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
    res = solve_lp(c, a_eq=a_eq_lp, b_eq=b_eq, a_ub=a_ub, b_ub=np.zeros(n),
                   bounds=[(0, None)] * n + [(None, None)])
    if res is None:
        raise ArbitrageError("no nonnegative pricing rule reproduces the quoted prices")
    min_coord = -res.fun
    if min_coord <= feas_tol:
        raise ArbitrageError("no strictly positive pricing kernel: market admits arbitrage")
    strict_center = res.x[:n].copy()

    vertices = enumerate_vertices(a_eq, b_eq, nonneg_tol=1e-12)
    if vertices.shape[0] == 0:
        raise ArbitrageError("pricing-kernel polytope is empty")
    interior = np.array([v.min() > feas_tol for v in vertices])
    return KernelPolytope(a_eq=a_eq, b_eq=b_eq, vertices=vertices,
                          interior_flags=interior, strict_center=strict_center,
                          min_coordinate=float(min_coord), feas_tol=feas_tol)


@dataclass(frozen=True, eq=False)
class SuperhedgeResult:
    price: float
    argmax_vertices: np.ndarray     # vertices within tolerance of the max
    argmax_indices: tuple


def superhedge_price(market: DiscreteMarket, payoff, polytope: KernelPolytope = None,
                     opt_tol: float = OPT_TOL) -> SuperhedgeResult:
    """Superhedging price of a claim: max over kernel vertices of E[xi Z].

    Also reports the full argmax vertex set (all vertices within `opt_tol`
    of the maximum).
    """
    payoff = np.asarray(payoff, dtype=float).ravel()
    if payoff.shape[0] != market.n:
        raise ValueError("payoff length must match the number of states")
    if polytope is None:
        polytope = build_kernel_polytope(market)
    values = polytope.vertices @ (market.probs * payoff)
    price = float(values.max())
    scale = max(1.0, abs(price))
    idx = tuple(int(i) for i in np.flatnonzero(values >= price - opt_tol * scale))
    return SuperhedgeResult(price=price, argmax_vertices=polytope.vertices[list(idx)],
                            argmax_indices=idx)


@dataclass(frozen=True, eq=False)
class AttainabilityResult:
    attainable: bool
    cash: float | None
    holdings: np.ndarray | None
    span_residual: float
    price_spread: float

    def __bool__(self) -> bool:
        return self.attainable


def is_attainable(market: DiscreteMarket, payoff, polytope: KernelPolytope = None,
                  opt_tol: float = OPT_TOL) -> AttainabilityResult:
    """Decide whether Z is replicable by cash plus static asset holdings.

    Two independent tests must agree: Z lies in span{assets, constant} by
    least squares, and E[xi Z] is constant across kernel vertices.  On
    success the replication (cash, per-asset holdings) is returned.
    """
    payoff = np.asarray(payoff, dtype=float).ravel()
    if payoff.shape[0] != market.n:
        raise ValueError("payoff length must match the number of states")
    if polytope is None:
        polytope = build_kernel_polytope(market)

    design = np.vstack([np.ones(market.n), market.assets]).T
    coef, *_ = np.linalg.lstsq(design, payoff, rcond=None)
    residual = float(np.max(np.abs(design @ coef - payoff)))

    values = polytope.vertices @ (market.probs * payoff)
    spread = float(values.max() - values.min())

    scale = max(1.0, float(np.abs(payoff).max()))
    span_ok = residual <= opt_tol * scale
    spread_ok = spread <= opt_tol * scale
    if span_ok != spread_ok:
        raise InternalInconsistency(
            f"attainability tests disagree: span residual {residual:.3e}, "
            f"vertex price spread {spread:.3e}")
    if not span_ok:
        return AttainabilityResult(False, None, None, residual, spread)
    return AttainabilityResult(True, float(coef[0]), coef[1:].copy(), residual, spread)


def replication_cost(market: DiscreteMarket, result: AttainabilityResult) -> float:
    """Initial capital of a replicating position: cash + holdings . prices."""
    if not result.attainable:
        raise ValueError("payoff is not attainable")
    return float(result.cash + result.holdings @ market.prices)
