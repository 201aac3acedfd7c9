"""Stochastic-order oracles and anti-monotone quantile couplings.

Distributions here are finite with equally weighted atoms.  Convex order is
decided by the majorization test on sorted atom vectors (equal means plus
dominance of every top-k partial sum), which for equiprobable atoms is
equivalent to membership of the closed convex hull of all permutations.
First- and second-order stochastic dominance use the matching sorted-atom
and bottom-partial-sum tests.

`antimonotone_couplings` realizes the randomized quantile transform of a
kernel with atoms: within every tie-block of the kernel the corresponding
block of descending atoms may be assigned in any order, and the randomization
is represented as the finite set of extreme deterministic assignments with
uniform weights.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import SizeLimit

MEAN_TOL = 1e-12
MAJORIZE_TOL = 1e-12
KERNEL_TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Equally weighted atoms, stored sorted ascending (duplicates allowed)."""

    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.sort(np.asarray(self.atoms, dtype=float).ravel())
        if atoms.size == 0:
            raise ValueError("distribution needs at least one atom")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms must be finite")
        atoms.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)

    @property
    def n(self) -> int:
        return self.atoms.shape[0]

    @property
    def mean(self) -> float:
        return float(self.atoms.mean())

    def refined(self, m: int) -> np.ndarray:
        """Atoms split to a refinement with m equally weighted pieces."""
        if m % self.n:
            raise ValueError("refinement must be a multiple of n")
        return np.repeat(self.atoms, m // self.n)


def distribution_of(values) -> DiscreteDistribution:
    return DiscreteDistribution(np.asarray(values, dtype=float))


def _common_refinement(a: DiscreteDistribution, b: DiscreteDistribution):
    m = math.lcm(a.n, b.n)
    return a.refined(m), b.refined(m)


def convex_order_leq(a: DiscreteDistribution, b: DiscreteDistribution,
                     mean_tol: float = MEAN_TOL, slack: float = MAJORIZE_TOL) -> bool:
    """True iff a precedes b in convex order (majorization of sorted atoms).

    Means must agree and every top-k partial sum of a's atoms must be
    dominated by b's.  Unequal atom counts are handled by exact splitting to
    the least common refinement.
    """
    av, bv = _common_refinement(a, b)
    scale = max(1.0, float(np.abs(av).max()), float(np.abs(bv).max()))
    if abs(av.mean() - bv.mean()) > mean_tol * scale:
        return False
    top_a = np.cumsum(av[::-1])
    top_b = np.cumsum(bv[::-1])
    return bool(np.all(top_a <= top_b + slack * scale * len(av)))


def fsd_leq(a: DiscreteDistribution, b: DiscreteDistribution,
            slack: float = MAJORIZE_TOL) -> bool:
    """First-order dominance: sorted atoms of a pairwise below b's."""
    av, bv = _common_refinement(a, b)
    scale = max(1.0, float(np.abs(av).max()), float(np.abs(bv).max()))
    return bool(np.all(av <= bv + slack * scale))


def ssd_leq(a: DiscreteDistribution, b: DiscreteDistribution,
            slack: float = MAJORIZE_TOL) -> bool:
    """Second-order dominance (integrated-cdf test).

    For equally weighted sorted atoms this is dominance of every bottom-k
    partial sum: sum of the k smallest atoms of a is at most b's, which is
    equivalent to E[u(a)] <= E[u(b)] for all nondecreasing concave u.
    """
    av, bv = _common_refinement(a, b)
    scale = max(1.0, float(np.abs(av).max()), float(np.abs(bv).max()))
    bot_a = np.cumsum(av)
    bot_b = np.cumsum(bv)
    return bool(np.all(bot_a <= bot_b + slack * scale * len(av)))


def conv_hull_member(payoff, target: DiscreteDistribution, **kwargs) -> bool:
    """True iff the payoff vector lies in the closed convex hull of all
    permutations of the target's atoms (equivalently its empirical
    distribution precedes the target in convex order)."""
    z = np.asarray(payoff, dtype=float).ravel()
    if z.shape[0] != target.n:
        raise ValueError("payoff length must match the number of atoms")
    return convex_order_leq(distribution_of(z), target, **kwargs)


@dataclass(frozen=True, eq=False)
class TransformedQuantilePayoff:
    """All extreme anti-monotone assignments of atoms against a kernel.

    Each assignment is a payoff vector pairing the distribution's atoms
    anti-monotonically with the kernel values; weights are the uniform
    randomization over tie-block orderings (duplicate vectors merged).
    `price` is the common minimal expectation E[xi Z] over Z with the target
    distribution.
    """

    assignments: tuple          # tuple[(np.ndarray, float weight), ...]
    kernel: np.ndarray
    price: float

    @property
    def payoffs(self) -> tuple:
        return tuple(p for p, _ in self.assignments)


def antimonotone_price(dist: DiscreteDistribution, xi) -> float:
    """Minimal expectation: ascending kernel values against descending atoms."""
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.shape[0] != dist.n:
        raise ValueError("kernel length must match the number of atoms")
    return float(np.sort(xi) @ dist.atoms[::-1]) / dist.n


def antimonotone_couplings(dist: DiscreteDistribution, xi,
                           tie_tol: float = KERNEL_TIE_TOL,
                           max_assignments: int = 100_000) -> TransformedQuantilePayoff:
    """Enumerate every deterministic anti-monotone assignment of atoms to states.

    States are sorted by kernel value; ties (within `tie_tol`, absolute on
    kernel values) form blocks whose descending-atom chunk may be permuted
    arbitrarily.  All extreme assignments are returned with uniform weights,
    merging duplicates that arise from repeated atom values.
    """
    xi = np.asarray(xi, dtype=float).ravel()
    n = dist.n
    if xi.shape[0] != n:
        raise ValueError("kernel length must match the number of atoms")
    order = np.argsort(xi, kind="stable")
    sorted_xi = xi[order]
    blocks: list[list[int]] = [[int(order[0])]]
    for pos in range(1, n):
        if sorted_xi[pos] - sorted_xi[pos - 1] <= tie_tol:
            blocks[-1].append(int(order[pos]))
        else:
            blocks.append([int(order[pos])])

    desc_atoms = dist.atoms[::-1]
    raw_total = 1
    for blk in blocks:
        raw_total *= math.factorial(len(blk))
        if raw_total > max_assignments:
            raise SizeLimit(f"{raw_total}+ tie-block assignments exceed the guard")

    chunks = []
    start = 0
    for blk in blocks:
        chunks.append(desc_atoms[start:start + len(blk)])
        start += len(blk)

    weights: dict[tuple, float] = {}
    per = 1.0 / raw_total
    for perm_combo in itertools.product(*(itertools.permutations(c) for c in chunks)):
        z = np.empty(n)
        for blk, chunk in zip(blocks, perm_combo):
            z[blk] = chunk
        key = tuple(z.tolist())
        weights[key] = weights.get(key, 0.0) + per

    assignments = tuple(sorted(((np.array(k), w) for k, w in weights.items()),
                               key=lambda item: tuple(item[0])))
    price = antimonotone_price(dist, xi)
    return TransformedQuantilePayoff(assignments=assignments, kernel=xi.copy(), price=price)
