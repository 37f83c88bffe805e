"""Exception hierarchy.

Every error carries a stable ``code`` string so the CLI can emit a
machine-readable error object without parsing messages.
"""

from __future__ import annotations


class RDError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "RDError"

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.message = message
        self.location = location

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "location": self.location}


class EmptySide(RDError):
    code = "EmptySide"


class CutoffOutOfRange(RDError):
    code = "CutoffOutOfRange"


class NonFiniteValue(RDError):
    code = "NonFiniteValue"


class ShapeMismatch(RDError):
    code = "ShapeMismatch"


class DegenerateBandwidth(RDError):
    code = "DegenerateBandwidth"


class ZeroDenominator(RDError):
    code = "ZeroDenominator"


class RankDeficientDesign(RDError):
    code = "RankDeficientDesign"


class InsufficientData(RDError):
    code = "InsufficientData"


class SingularFit(RDError):
    code = "SingularFit"


class CovariateWidthMismatch(RDError):
    code = "CovariateWidthMismatch"


class BootstrapDegenerate(RDError):
    code = "BootstrapDegenerate"


class UnsupportedMoment(RDError):
    code = "UnsupportedMoment"


class MissingColumn(RDError):
    code = "MissingColumn"


class UnparseableValue(RDError):
    code = "UnparseableValue"


class EmptyFile(RDError):
    code = "EmptyFile"


class IoFailure(RDError):
    code = "IoFailure"


class ConfigError(RDError):
    """Invalid or inconsistent configuration (a usage error, exit code 2)."""

    code = "ConfigError"
