class ConfigError(ValueError):
    """Invalid scenario or operation parameters."""


class NumericalConsistencyError(ArithmeticError):
    """A computed quantity violated an identity it must satisfy."""
