"""Exception hierarchy shared by every augnet module."""

from pathlib import Path
from typing import Optional, Union


class AugnetError(Exception):
    """Base class for all errors raised by augnet."""


class GraphParseError(AugnetError, ValueError):
    """A graph input file has a malformed line."""

    def __init__(
        self, path: Union[str, Path], line_number: int, message: str
    ) -> None:
        self.path = str(path)
        self.line_number = line_number
        super().__init__(f"{self.path}:{line_number}: {message}")


class BoundsError(AugnetError, IndexError):
    """A node or attribute index lies outside the declared range."""


class DimensionError(AugnetError, ValueError):
    """Matrix or vector shapes do not agree."""


class ConfigurationError(AugnetError, ValueError):
    """Invalid configuration value, flag or experiment setup."""


class SamplingError(AugnetError, RuntimeError):
    """No valid negative entity exists for an anchor."""


class CompatibilityError(AugnetError, ValueError):
    """A stored snapshot does not match the requested configuration."""


class NonFiniteGradientError(AugnetError, FloatingPointError):
    """A gradient contains NaN or infinite entries."""

    def __init__(self, name: str, bad_count: int, step: Optional[int] = None) -> None:
        self.name = name
        self.bad_count = bad_count
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"Non-finite gradient for '{name}'{where}: {bad_count} bad entries"
        )
