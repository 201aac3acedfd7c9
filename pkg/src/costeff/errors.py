"""Exception types shared across the library."""


class CosteffError(Exception):
    """Base class for library-specific failures."""


class ArbitrageError(CosteffError):
    """No strictly positive pricing kernel exists for the market."""


class DegenerateMarket(CosteffError):
    """The pricing equality system is inconsistent."""


class InternalInconsistency(CosteffError):
    """Two computations that must agree disagreed beyond tolerance."""


class SizeLimit(CosteffError):
    """Problem size exceeds a combinatorial guard."""


class NonconcaveResult(CosteffError):
    """A constructed utility fails concavity or strict monotonicity."""


class DomainError(CosteffError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class BracketError(CosteffError):
    """A root bracket degenerated; parameters are pathological."""


class QuadratureError(CosteffError):
    """Numerical integration failed its self-consistency check."""


class LPFailure(CosteffError):
    """The LP backend reported an unexpected status."""


class MergedAtoms(UserWarning):
    """Distribution atoms coincide; derived slopes may tie."""
