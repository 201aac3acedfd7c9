"""The four distributional cost problems and perfect cost-efficiency detection.

Given an equiprobable market and a target distribution F with one atom per
state, the problems are

  maximin       sup over kernels of the minimal E[xi Z] over Z ~ F,
  cvx maximin   same with Z ranging over the convex hull of F-arrangements,
  cvx minimax   inf over the hull of the superhedging price sup E[xi Z],
  minimax       inf over exact F-arrangements of the superhedging price.

The first three always share one optimal value, which never exceeds the
minimax value; the gap closes exactly when F is perfectly cost-efficient,
i.e. when the cost-efficiency problem is solved by a payoff that still has
distribution F.

The maximin problem maximizes a concave piecewise-linear function of the
kernel (the anti-monotone coupling price), solved as an LP with lazy
constraint generation whose separation oracle is a sort.  Optimizers are
reported as sets: extreme optimal kernels come from exact vertex enumeration
of the optimal face, and the payoffs coupled to each kernel are the extreme
anti-monotone assignments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._lp import enumerate_vertices, solve_lp
from .errors import InternalInconsistency, SizeLimit
from .market import (DiscreteMarket, KernelPolytope, build_kernel_polytope,
                     is_attainable, OPT_TOL)
from .orders import (DiscreteDistribution, antimonotone_couplings,
                     antimonotone_price)

PERM_GUARD = 8
SUBSET_LIMIT = 12
LIFT_LIMIT = 64
_MAX_CG_ROUNDS = 80
_COUPLING_TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OptimizerFamily:
    """A product set of optimizers: any payoff in conv(payoffs) paired with
    any kernel in conv(kernels) attains the reported value."""

    payoffs: tuple   # tuple[np.ndarray, ...], extreme payoffs
    kernels: tuple   # tuple[np.ndarray, ...], extreme kernels


@dataclass(frozen=True, eq=False)
class SolveReport:
    problem: str
    value: float
    families: tuple          # tuple[OptimizerFamily, ...]
    certificate: dict = field(default_factory=dict)

    def optimizer_payoffs(self) -> tuple:
        return tuple(p for fam in self.families for p in fam.payoffs)


def _require_inputs(market: DiscreteMarket, dist: DiscreteDistribution):
    if not market.is_equiprobable:
        raise ValueError("distributional solvers require equiprobable states; "
                         "general probabilities are supported for pricing only")
    if dist.n != market.n:
        raise ValueError("distribution must carry one atom per market state")


def _dedupe_payoffs(payoffs, tol: float = 1e-9):
    out: list[np.ndarray] = []
    for p in payoffs:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(np.asarray(p, dtype=float))
    return out


def _maximin_lp(polytope: KernelPolytope, arrangements, n: int):
    """max t  s.t.  xi in the kernel polytope,  (1/n) Z . xi >= t per arrangement."""
    m = polytope.a_eq.shape[0]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_eq = np.hstack([polytope.a_eq, np.zeros((m, 1))])
    a_ub = np.array([np.concatenate([-z / n, [1.0]]) for z in arrangements])
    res = solve_lp(c, a_eq=a_eq, b_eq=polytope.b_eq, a_ub=a_ub, b_ub=np.zeros(len(arrangements)),
                   bounds=[(0, None)] * n + [(None, None)])
    if res is None:
        raise InternalInconsistency("maximin restriction LP infeasible on a nonempty polytope")
    return res.x[:n], float(res.x[-1])


def _kernel_face_vertices(polytope: KernelPolytope, dist: DiscreteDistribution,
                          v_star: float, seed_arrangements, opt_tol: float):
    """Extreme points of the optimal-kernel face {xi : anti-monotone price = v*}.

    The face is carved out of the polytope by the arrangement constraints
    active at an optimum; vertices of the carved polyhedron are enumerated
    exactly and re-verified with the separation oracle, enlarging the
    constraint set until every enumerated vertex is genuinely optimal.
    """
    n = dist.n
    scale = max(1.0, abs(v_star))
    active = _dedupe_payoffs(seed_arrangements)
    for _ in range(_MAX_CG_ROUNDS):
        k = len(active)
        m = polytope.a_eq.shape[0]
        a = np.zeros((m + k, n + k))
        a[:m, :n] = polytope.a_eq
        for j, z in enumerate(active):
            a[m + j, :n] = z / n
            a[m + j, n + j] = -1.0
        b = np.concatenate([polytope.b_eq, np.full(k, v_star)])
        verts = enumerate_vertices(a, b, nonneg_tol=1e-7)
        candidates = _dedupe_payoffs([v[:n] for v in verts], tol=1e-8 * scale)
        fresh = []
        kept = []
        for xi in candidates:
            price = antimonotone_price(dist, xi)
            if price < v_star - 10 * opt_tol * scale:
                coup = antimonotone_couplings(dist, xi, tie_tol=_COUPLING_TIE_TOL)
                fresh.extend(coup.payoffs)
            else:
                kept.append(xi)
        if not fresh:
            if not kept:
                raise InternalInconsistency("optimal kernel face came back empty")
            return kept, active
        active = _dedupe_payoffs(active + fresh)
    raise InternalInconsistency("kernel face refinement did not converge")


def solve_maximin(market: DiscreteMarket, dist: DiscreteDistribution,
                  polytope: KernelPolytope = None, opt_tol: float = OPT_TOL) -> SolveReport:
    """Maximize the anti-monotone coupling price over the closed kernel set.

    Constraint generation: the LP keeps a working set of payoff arrangements,
    and the separation oracle (sorting the iterate's kernel values against
    descending atoms) either certifies optimality or yields a violated
    arrangement.  Returns the optimal value, the extreme optimal kernels and
    the full randomized coupling at each of them.
    """
    _require_inputs(market, dist)
    if polytope is None:
        polytope = build_kernel_polytope(market)
    n = market.n

    seed = antimonotone_couplings(dist, polytope.strict_center, tie_tol=_COUPLING_TIE_TOL)
    arrangements = _dedupe_payoffs(seed.payoffs)
    value = seed.price
    xi_hat = polytope.strict_center
    for _ in range(_MAX_CG_ROUNDS):
        xi_hat, t_hat = _maximin_lp(polytope, arrangements, n)
        coup = antimonotone_couplings(dist, xi_hat, tie_tol=_COUPLING_TIE_TOL)
        value = coup.price
        scale = max(1.0, abs(t_hat))
        if value >= t_hat - opt_tol * scale:
            break
        arrangements = _dedupe_payoffs(arrangements + list(coup.payoffs))
    else:
        raise InternalInconsistency("maximin constraint generation did not converge")

    face, active = _kernel_face_vertices(polytope, dist, value,
                                         list(coup.payoffs) + arrangements, opt_tol)
    families = []
    couplings = []
    for xi in face:
        c = antimonotone_couplings(dist, xi, tie_tol=_COUPLING_TIE_TOL)
        couplings.append(c)
        families.append(OptimizerFamily(payoffs=c.payoffs, kernels=(xi,)))
    certificate = {
        "face_vertices": tuple(face),
        "active_arrangements": tuple(np.asarray(z) for z in active),
        "couplings": tuple(couplings),
    }
    return SolveReport(problem="maximin", value=value, families=tuple(families),
                       certificate=certificate)


def solve_minimax(market: DiscreteMarket, dist: DiscreteDistribution,
                  polytope: KernelPolytope = None, perm_guard: int = PERM_GUARD,
                  opt_tol: float = OPT_TOL) -> SolveReport:
    """Cheapest superhedged arrangement with the exact target distribution.

    Enumerates the distinct permutations of the atoms, prices each against
    all kernel vertices, and reports every minimizing arrangement with its
    argmax vertex set (all vertices when the price is kernel-independent).
    """
    _require_inputs(market, dist)
    if market.n > perm_guard:
        raise SizeLimit(f"n={market.n} exceeds the permutation guard {perm_guard}")
    if polytope is None:
        polytope = build_kernel_polytope(market)
    perms = sorted(set(itertools.permutations(dist.atoms.tolist())))
    pmat = np.array(perms)
    prices_by_vertex = pmat @ (polytope.vertices * market.probs).T
    prices = prices_by_vertex.max(axis=1)
    value = float(prices.min())
    scale = max(1.0, abs(value))
    families = []
    opt_perms = np.flatnonzero(prices <= value + opt_tol * scale)
    for i in opt_perms:
        row = prices_by_vertex[i]
        argmax = np.flatnonzero(row >= row.max() - opt_tol * scale)
        families.append(OptimizerFamily(
            payoffs=(pmat[i].copy(),),
            kernels=tuple(polytope.vertices[j] for j in argmax)))
    certificate = {
        "optimal_arrangements": tuple(pmat[i].copy() for i in opt_perms),
        "all_vertices_optimal": tuple(
            len(f.kernels) == polytope.vertices.shape[0] for f in families),
    }
    return SolveReport(problem="minimax", value=value, families=tuple(families),
                       certificate=certificate)


def _majorization_rows_subsets(n: int):
    rows = []
    for r in range(1, n):
        for subset in itertools.combinations(range(n), r):
            row = np.zeros(n)
            row[list(subset)] = 1.0
            rows.append((row, r))
    return rows


def solve_cvx_minimax(market: DiscreteMarket, dist: DiscreteDistribution,
                      polytope: KernelPolytope = None, opt_tol: float = OPT_TOL,
                      subset_limit: int = SUBSET_LIMIT, lift_limit: int = LIFT_LIMIT) -> SolveReport:
    """Minimize the superhedging price over the convex hull of F-arrangements.

    LP epigraph formulation: minimize t subject to every kernel-vertex price
    below t and membership of the majorization polytope (every k-subset sum
    bounded by the top-k atom sum; an epigraph lifting replaces the subset
    rows beyond `subset_limit` states).  The optimizer payoff is unique for
    generic data; the optimal kernel set typically spans all vertices.
    """
    _require_inputs(market, dist)
    n = market.n
    if n > lift_limit:
        raise SizeLimit(f"n={n} exceeds the lifting capability {lift_limit}")
    if polytope is None:
        polytope = build_kernel_polytope(market)
    atoms = dist.atoms
    top = np.cumsum(atoms[::-1])
    total = float(top[-1])
    n_vert = polytope.vertices.shape[0]

    if n <= subset_limit:
        nvar = n + 1
        c = np.zeros(nvar)
        c[-1] = 1.0
        rows, rhs = [], []
        for v in polytope.vertices:
            rows.append(np.concatenate([market.probs * v, [-1.0]]))
            rhs.append(0.0)
        for row, r in _majorization_rows_subsets(n):
            rows.append(np.concatenate([row, [0.0]]))
            rhs.append(float(top[r - 1]))
        a_eq = np.concatenate([np.ones(n), [0.0]])[None, :]
        res = solve_lp(c, a_eq=a_eq, b_eq=[total], a_ub=np.array(rows), b_ub=np.array(rhs),
                       bounds=[(None, None)] * n + [(None, None)])
    else:
        # variables: z (n), t, theta_k (n-1), s_{ik} (n*(n-1))
        n_theta = n - 1
        nvar = n + 1 + n_theta + n * n_theta
        c = np.zeros(nvar)
        c[n] = 1.0

        def s_idx(i, k):
            return n + 1 + n_theta + k * n + i

        rows, rhs = [], []
        for v in polytope.vertices:
            row = np.zeros(nvar)
            row[:n] = market.probs * v
            row[n] = -1.0
            rows.append(row)
            rhs.append(0.0)
        for k in range(n_theta):
            for i in range(n):
                row = np.zeros(nvar)
                row[i] = 1.0
                row[n + 1 + k] = -1.0
                row[s_idx(i, k)] = -1.0
                rows.append(row)
                rhs.append(0.0)
            row = np.zeros(nvar)
            row[n + 1 + k] = k + 1.0
            for i in range(n):
                row[s_idx(i, k)] = 1.0
            rows.append(row)
            rhs.append(float(top[k]))
        a_eq = np.zeros((1, nvar))
        a_eq[0, :n] = 1.0
        bounds = [(None, None)] * (n + 1 + n_theta) + [(0, None)] * (n * n_theta)
        res = solve_lp(c, a_eq=a_eq, b_eq=[total], a_ub=np.array(rows), b_ub=np.array(rhs),
                       bounds=bounds)
    if res is None:
        raise InternalInconsistency("majorization polytope LP infeasible")
    z_star = res.x[:n].copy()
    value = float(res.fun)
    scale = max(1.0, abs(value))
    vertex_prices = polytope.vertices @ (market.probs * z_star)
    argmax = np.flatnonzero(vertex_prices >= vertex_prices.max() - opt_tol * scale)
    kernels = tuple(polytope.vertices[j] for j in argmax)
    family = OptimizerFamily(payoffs=(z_star,), kernels=kernels)
    certificate = {
        "argmax_vertices": kernels,
        "all_vertices_optimal": len(kernels) == n_vert,
    }
    return SolveReport(problem="cvx_minimax", value=value, families=(family,),
                       certificate=certificate)


def solve_cvx_maximin(market: DiscreteMarket, dist: DiscreteDistribution,
                      polytope: KernelPolytope = None, opt_tol: float = OPT_TOL) -> SolveReport:
    """Maximin over the convex hull: same value as the maximin problem, with
    optimizer faces.

    The inner minimum over the hull of a linear kernel functional is attained
    on the face spanned by the anti-monotone assignments, so for every
    extreme optimal kernel the reported payoff family is that face; the
    assignments shared by all extreme kernels (when the optimal kernel set
    is higher-dimensional) form an additional family valid across the whole
    kernel face.
    """
    base = solve_maximin(market, dist, polytope=polytope, opt_tol=opt_tol)
    face = base.certificate["face_vertices"]
    couplings = base.certificate["couplings"]
    families = [OptimizerFamily(payoffs=c.payoffs, kernels=(xi,))
                for xi, c in zip(face, couplings)]
    shared: tuple = ()
    if len(face) > 1:
        keys = [set(tuple(np.round(p, 9)) for p in c.payoffs) for c in couplings]
        common = set.intersection(*keys)
        shared = tuple(np.array(k) for k in sorted(common))
        if shared:
            families.append(OptimizerFamily(payoffs=shared, kernels=tuple(face)))
    certificate = dict(base.certificate)
    certificate["shared_arrangements"] = shared
    return SolveReport(problem="cvx_maximin", value=base.value, families=tuple(families),
                       certificate=certificate)


@dataclass(frozen=True, eq=False)
class PerfectCEReport:
    is_perfect: bool
    equality_gap: float
    optimizer_distribution_matches: bool
    attainable_antimonotone_witness: np.ndarray | None
    reports: dict


def solve_all(market: DiscreteMarket, dist: DiscreteDistribution,
              polytope: KernelPolytope = None, perm_guard: int = PERM_GUARD,
              opt_tol: float = OPT_TOL) -> dict:
    """Run all four solvers and enforce the value chain
    maximin = cvx maximin = cvx minimax <= minimax."""
    if polytope is None:
        polytope = build_kernel_polytope(market)
    reports = {
        "maximin": solve_maximin(market, dist, polytope, opt_tol),
        "minimax": solve_minimax(market, dist, polytope, perm_guard, opt_tol),
        "cvx_minimax": solve_cvx_minimax(market, dist, polytope, opt_tol),
    }
    reports["cvx_maximin"] = solve_cvx_maximin(market, dist, polytope, opt_tol)
    v = {k: r.value for k, r in reports.items()}
    scale = max(1.0, *(abs(x) for x in v.values()))
    if abs(v["maximin"] - v["cvx_maximin"]) > opt_tol * scale or \
       abs(v["maximin"] - v["cvx_minimax"]) > opt_tol * scale or \
       v["maximin"] > v["minimax"] + opt_tol * scale:
        raise InternalInconsistency(f"value chain violated: {v}")
    return reports


def check_perfect_ce(market: DiscreteMarket, dist: DiscreteDistribution,
                     polytope: KernelPolytope = None, perm_guard: int = PERM_GUARD,
                     opt_tol: float = OPT_TOL) -> PerfectCEReport:
    """Decide perfect cost-efficiency of a target distribution.

    The distribution is perfectly cost-efficient iff the minimax value equals
    the shared value of the other three problems and some cost-efficiency
    optimizer retains the target distribution.  When the gap vanishes every
    minimizing exact arrangement is itself a hull optimizer, so the
    distribution-match test accepts either the hull LP's optimizer or that
    arrangement.  For a perfect distribution an attainable anti-monotone
    witness payoff must exist among the maximin coupling assignments and is
    returned.
    """
    if polytope is None:
        polytope = build_kernel_polytope(market)
    reports = solve_all(market, dist, polytope, perm_guard, opt_tol)
    gap = reports["minimax"].value - reports["maximin"].value
    scale = max(1.0, abs(reports["minimax"].value), abs(reports["maximin"].value))
    gap_ok = gap < opt_tol * scale

    atoms = dist.atoms
    z_star = reports["cvx_minimax"].families[0].payoffs[0]
    matches = bool(np.max(np.abs(np.sort(z_star) - atoms)) <= opt_tol * scale)
    if not matches and gap_ok:
        # the minimax arrangement attains the hull optimum, and it has
        # distribution F by construction
        matches = True

    is_perfect = gap_ok and matches
    witness = None
    if is_perfect:
        seen = []
        for fam in reports["maximin"].families:
            seen.extend(fam.payoffs)
        seen.extend(reports["cvx_maximin"].certificate.get("shared_arrangements", ()))
        for payoff in _dedupe_payoffs(seen):
            att = is_attainable(market, payoff, polytope, opt_tol=1e-7)
            if att.attainable:
                witness = payoff
                break
        if witness is None:
            raise InternalInconsistency(
                "perfect cost-efficiency without an attainable anti-monotone witness")
    return PerfectCEReport(is_perfect=is_perfect, equality_gap=float(gap),
                           optimizer_distribution_matches=matches,
                           attainable_antimonotone_witness=witness,
                           reports=reports)
