"""Exceptions raised by the drift_green library."""

from __future__ import annotations


class GreenLabError(Exception):
    """Base class for every library error."""


class ConfigurationError(GreenLabError, ValueError):
    """Invalid parameters, unknown JSON fields or bad usage."""


class DomainError(GreenLabError, ValueError):
    """Argument outside the domain of an operation."""


class DivergentIntegralError(DomainError):
    """The requested drift integral is infinite."""


class ResolutionError(DomainError):
    """Grid too coarse for the requested mollifier radius."""


class UnsupportedDriftError(DomainError):
    """Drift family not admissible for the requested operation."""


class NumericalError(GreenLabError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy result."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float) -> None:
        super().__init__(f"{message} (error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class SolverError(NumericalError):
    """Krylov iteration did not converge."""

    def __init__(self, message: str, residual_history: list[float]) -> None:
        last = residual_history[-1] if residual_history else float("nan")
        super().__init__(f"{message} (last relative residual {last:.3e})")
        self.residual_history = residual_history


class LogSpaceOverflowError(NumericalError):
    """An exponential left the representable range."""


class MaximumPrincipleError(NumericalError):
    """A discrete solution took a negative value beyond round-off."""

    def __init__(self, minimum: float) -> None:
        super().__init__(f"discrete maximum principle violated: min(u) = {minimum:.3e}")
        self.minimum = minimum
