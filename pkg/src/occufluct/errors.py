"""Exception types shared across the package."""


class DomainError(ValueError):
    """Parameters outside the mathematical domain of an operation."""


class QuadratureError(RuntimeError):
    """A numerical integration failed to reach the requested accuracy."""


class ConfigError(ValueError):
    """A scenario configuration file is missing, malformed or inconsistent."""
