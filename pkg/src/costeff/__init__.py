"""Cost-efficient payoffs in incomplete markets.

Library layout:

- ``market``      finite-state markets, pricing-kernel polytopes, superhedging
- ``orders``      convex order / stochastic dominance / anti-monotone couplings
- ``solvers``     the four distributional cost problems, perfect cost-efficiency
- ``rationalize`` concave utilities rationalizing cost-efficient payoffs
- ``three_state`` closed-form oracle for the reference 3-state market
- ``stochvol``    regime-switching volatility mixture model and price frontier
- ``mixability``  coupling bounds for sums with a common marginal
- ``cli``         command-line surface over all of the above
"""

from .errors import (ArbitrageError, BracketError, CosteffError, DegenerateMarket,
                     DomainError, InternalInconsistency, LPFailure, MergedAtoms,
                     NonconcaveResult, QuadratureError, SizeLimit)
from .market import (AttainabilityResult, DiscreteMarket, KernelPolytope,
                     SuperhedgeResult, build_kernel_polytope, is_attainable,
                     load_market, market_from_dict, market_to_dict,
                     replication_cost, superhedge_price)
from .orders import (DiscreteDistribution, TransformedQuantilePayoff,
                     antimonotone_couplings, antimonotone_price, conv_hull_member,
                     convex_order_leq, distribution_of, fsd_leq, ssd_leq)
from .solvers import (OptimizerFamily, PerfectCEReport, SolveReport,
                      check_perfect_ce, solve_all, solve_cvx_maximin,
                      solve_cvx_minimax, solve_maximin, solve_minimax)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
