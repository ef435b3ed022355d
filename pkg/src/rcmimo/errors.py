"""Exception hierarchy shared by every module."""


class RcmimoError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(RcmimoError, ValueError):
    """An operation received inputs of the wrong shape or non-finite values."""


class ConfigurationError(RcmimoError, ValueError):
    """Invalid simulation, constellation or dispersion-code configuration."""


class ParameterError(RcmimoError, ValueError):
    """Code parameters violate the full-rank or power constraints."""


class FeasibilityError(RcmimoError, ArithmeticError):
    """Channel or parameters make the requested computation infeasible."""


class DegenerateCombinerError(FeasibilityError):
    """The combined scalar channel of the conditional decoder vanished."""
