"""LP plumbing: a linprog wrapper and exact basic-feasible-solution enumeration.

The polytopes handled here are tiny (dimension <= 10 at desk scale), so
vertex enumeration by exhausting square bases is exact and cheap, and gives
the full optimizer sets that a single LP solve cannot.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from .errors import LPFailure, SizeLimit

_MAX_BASES = 500_000


def solve_lp(c, a_eq=None, b_eq=None, a_ub=None, b_ub=None, bounds=None):
    """Solve min c@x via HiGHS and return the scipy result, raising on failure.

    Status 2 (infeasible) is returned to the caller as None so market-level
    code can map it to a domain error.
    """
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return None
    if res.status != 0:
        raise LPFailure(f"LP solver status {res.status}: {res.message}")
    return res


def independent_rows(a: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    """Select a maximal independent row subset of [a|b].

    Returns (a_red, b_red, consistent): `consistent` is False when b is not
    in the row space spanned by the selected rows (inconsistent system).
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m = a.shape[0]
    scale = max(1.0, float(np.abs(a).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    keep: list[int] = []
    basis: list[np.ndarray] = []
    for i in range(m):
        row = a[i].copy()
        for v in basis:
            row -= (row @ v) * v
        nrm = np.linalg.norm(row)
        if nrm > tol * scale * max(1, a.shape[1]):
            basis.append(row / nrm)
            keep.append(i)
    a_red = a[keep]
    b_red = b[keep]
    # Consistency: every dropped row must be the same combination of kept rows
    # on the b side as on the a side.
    if len(keep) < m:
        coef, *_ = np.linalg.lstsq(a_red.T, a[[i for i in range(m) if i not in keep]].T, rcond=None)
        b_pred = coef.T @ b_red
        b_drop = b[[i for i in range(m) if i not in keep]]
        if np.max(np.abs(b_pred - b_drop), initial=0.0) > 1e-8 * scale:
            return a_red, b_red, False
    return a_red, b_red, True


def enumerate_vertices(a_eq: np.ndarray, b_eq: np.ndarray, *,
                       nonneg_tol: float = 1e-9,
                       dedupe_tol: float = 1e-8) -> np.ndarray:
    """Enumerate the vertices of {x >= 0 : a_eq @ x = b_eq}.

    Every vertex of a standard-form polyhedron is a basic feasible solution,
    so exhausting square bases of the row-reduced system finds them all.
    Coordinates within `nonneg_tol` below zero are clamped to zero.
    """
    a_red, b_red, consistent = independent_rows(a_eq, b_eq)
    if not consistent:
        return np.empty((0, np.atleast_2d(a_eq).shape[1]))
    m, n = a_red.shape
    if m == 0:
        raise LPFailure("empty equality system has no vertices")
    from math import comb
    if comb(n, m) > _MAX_BASES:
        raise SizeLimit(f"vertex enumeration over C({n},{m}) bases exceeds guard")
    scale = max(1.0, float(np.abs(b_red).max(initial=0.0)))
    found: list[np.ndarray] = []
    for cols in itertools.combinations(range(n), m):
        sub = a_red[:, cols]
        try:
            with np.errstate(all="ignore"):
                xb = np.linalg.solve(sub, b_red)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(xb)):
            continue
        # Reject solutions from nearly singular bases.
        if np.max(np.abs(sub @ xb - b_red)) > 1e-8 * scale:
            continue
        if xb.min(initial=0.0) < -nonneg_tol * scale:
            continue
        x = np.zeros(n)
        xb = np.clip(xb, 0.0, None)
        xb[xb <= nonneg_tol * scale] = 0.0
        x[list(cols)] = xb
        found.append(x)
    uniques: list[np.ndarray] = []
    for x in found:
        if not any(np.max(np.abs(x - u)) <= dedupe_tol * scale for u in uniques):
            uniques.append(x)
    if not uniques:
        return np.empty((0, n))
    order = np.lexsort(np.array(uniques).T[::-1])
    return np.array(uniques)[order]
