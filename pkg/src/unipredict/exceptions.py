"""Exception types raised across the package."""


class UndefinedConditional(ValueError):
    """Conditioning on a prefix that has probability zero."""


class HorizonTooLarge(ValueError):
    """Exact enumeration requested beyond the configured cap."""


class ModelNotInClass(ValueError):
    """The environment measure is not one of the model class entries."""


class DegenerateRange(ValueError):
    """A loss with zero range cannot be rescaled."""


class InvalidRange(ValueError):
    """An argument lies outside the range a bound formula requires."""


class NonPositiveEdge(ValueError):
    """The informed scheme has no positive average profit."""


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class DominanceViolation(ArithmeticError):
    """The mixture assigns zero to an outcome the environment can produce."""
