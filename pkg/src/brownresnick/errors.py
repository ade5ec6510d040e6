"""Exception types shared across the package."""


class BrownResnickError(Exception):
    """Base class for all package errors."""


class ConfigError(BrownResnickError):
    """A configuration field is missing, inconsistent, or out of range."""


class DomainError(BrownResnickError):
    """An analytic formula was evaluated outside its stated domain."""


class NonPositiveDefinite(BrownResnickError):
    """Covariance factorization failed even with maximal diagonal jitter."""


class EmptyMarkSpace(BrownResnickError):
    """A marked point stream was given an empty mark space."""


class InvalidLattice(BrownResnickError):
    """Grid/lattice parameters violate the block-decomposition constraints."""


class InvalidWindow(BrownResnickError):
    """A simulation window is too small for the requested evaluation."""


class RejectionBudgetExceeded(BrownResnickError):
    """Too many consecutive rejections while sampling the shape measure."""


class ZeroAcceptance(BrownResnickError):
    """No Monte-Carlo sample satisfied the acceptance condition."""


class AsymmetricShifts(DomainError):
    """The shift set must be symmetric for the method-1 error bound."""


class EmptySample(BrownResnickError):
    """A statistic was requested on an empty sample."""


class BlockMismatch(BrownResnickError):
    """Sample count is not divisible by the requested block size."""


class UnknownGridPoint(BrownResnickError):
    """A requested location is not a point of the simulation grid."""
