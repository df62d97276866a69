# src/errors.py

from typing import Optional


class LaboratoryError(Exception):
    """Base class for every error raised by the laboratory."""


class InvalidFieldError(LaboratoryError, ValueError):
    """A field holds non-finite samples, has the wrong shape, or mixes grids."""


class AsymmetricSpectrumError(LaboratoryError, ValueError):
    """A spectrum that should describe a real field is not Hermitian."""


class OracleSizeError(LaboratoryError, ValueError):
    """A reference (quadratic-cost) path was asked for a grid above its guard."""


class ParameterError(LaboratoryError, ValueError):
    """An operator or functional parameter lies outside its admissible range."""


class InitialDataError(LaboratoryError, ValueError):
    """Initial data cannot be built as requested (e.g. rescaling a zero field)."""


class ConfigError(LaboratoryError, ValueError):
    """A scenario document is malformed or violates a parameter invariant."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class BlowUpError(LaboratoryError, RuntimeError):
    """The numerical solution stopped being finite or grew past the blow-up threshold."""

    def __init__(self, time: float, reason: str = "non-finite values"):
        super().__init__(f"blow-up detected at t={time:.6g}: {reason}")
        self.time = time
        self.reason = reason


class ResultsFormatError(LaboratoryError, ValueError):
    """A stored series file does not have the DiagnosticsRecord column layout."""
