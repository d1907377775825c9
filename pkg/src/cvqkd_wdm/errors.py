"""Exception types shared across the planner."""


class InputDomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalDomainError(ArithmeticError):
    """A computed quantity violates a physical bound (e.g. a symplectic eigenvalue below 1)."""


class ConfigError(ValueError):
    """A configuration file is malformed or holds an invalid value.

    ``key`` names the offending entry (dotted path) when known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)
