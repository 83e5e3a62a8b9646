from __future__ import annotations


class DomainError(ValueError):
    """Input outside the domain where an operation is defined."""


class SizeError(RuntimeError):
    """A configured size guard was exceeded."""

    def __init__(self, message: str, size: int):
        super().__init__(f"{message} (size {size})")
        self.size = size


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message}; achieved error estimate {achieved:.3e}")
        self.achieved = achieved


class InvalidPotentialError(ValueError):
    """The potential breaks an assumption of the scattering solver."""


class ConstructionError(RuntimeError):
    """A state or ensemble could not be assembled from the given data."""


class ConfigError(ValueError):
    """Malformed or unknown configuration input."""
