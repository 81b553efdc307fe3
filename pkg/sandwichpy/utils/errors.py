"""
sandwichpy Error Handling
Custom exceptions for source modelling, analysis and the command line.
"""

from typing import Optional, Sequence


class SandwichError(Exception):
    """Base exception for all sandwichpy-related errors."""
    def __init__(self, message: str, component: Optional[str] = None):
        self.message = message
        self.component = component
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        if self.component:
            return f"[{self.component}] {self.message}"
        return self.message

    def __str__(self) -> str:
        return self._format_message()


class ConfigError(SandwichError):
    """Exception raised for configuration-related errors."""
    def __init__(self, message: str, config_key: Optional[str] = None):
        self.config_key = config_key
        super().__init__(message, component="Config")
        if config_key:
            self.message = f"Config '{config_key}': {self.message}"


class ValidationError(SandwichError):
    """Exception raised when a value violates a type invariant."""
    def __init__(self, message: str, value=None):
        self.value = value
        super().__init__(message, component="Validation")
        if value is not None:
            self.message = f"{self.message} (value: {value})"


class RangeError(SandwichError):
    """Exception raised when a dispersion model is evaluated outside its validity range."""
    def __init__(self, message: str, model: Optional[str] = None, bounds: Optional[Sequence[float]] = None):
        self.model = model
        self.bounds = tuple(bounds) if bounds is not None else None
        super().__init__(message, component="Dispersion")
        if model:
            self.message = f"{model}: {self.message}"
        if self.bounds is not None:
            self.message = f"{self.message} (valid range: {self.bounds[0]:g}-{self.bounds[1]:g})"


class DomainError(SandwichError):
    """Exception raised for mathematically forbidden inputs."""
    def __init__(self, message: str, value=None):
        self.value = value
        super().__init__(message, component="Domain")
        if value is not None:
            self.message = f"{self.message} (value: {value})"


class UsageError(SandwichError):
    """Exception raised when the API or command line is used incorrectly."""
    def __init__(self, message: str):
        super().__init__(message, component="Usage")


class NoRootError(SandwichError):
    """Exception raised when the phase-matching residual has no sign change in the search interval."""
    def __init__(self, message: str, residuals: Optional[Sequence[float]] = None):
        self.residuals = tuple(residuals) if residuals is not None else None
        super().__init__(message, component="PhaseMatch")
        if self.residuals is not None:
            self.message = f"{self.message} (endpoint residuals: {self.residuals[0]:.6g}, {self.residuals[1]:.6g} rad)"


class FitError(SandwichError):
    """Exception raised when a visibility fit is degenerate."""
    def __init__(self, message: str):
        super().__init__(message, component="Fit")
