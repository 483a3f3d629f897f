"""Exception hierarchy shared by every hesslab module."""


class HesslabError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(HesslabError, ValueError):
    """An argument is outside the range where the computation is defined."""


class DimensionError(ParameterError):
    """A point does not live in the space the function is defined on."""


class SingularPointError(HesslabError):
    """A stencil or probe comes too close to a declared singular set."""


class HessianError(HesslabError):
    """A Hessian could not be evaluated or is not Hermitian."""


class EstimatorError(HesslabError):
    """A Monte Carlo or quadrature estimate could not be produced."""


class InconclusiveError(HesslabError):
    """A decision procedure ran out of budget without reaching a verdict."""
