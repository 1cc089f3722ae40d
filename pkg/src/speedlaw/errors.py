"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the command line
layer can report failures in a stable, parseable form.
"""

from __future__ import annotations


class SpeedlawError(Exception):
    """Base class for all package errors."""

    code = "speedlaw-error"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class InvalidParameters(SpeedlawError):
    """A scalar or structural argument is outside its admissible range."""

    code = "invalid-parameters"


class EmptyInput(SpeedlawError):
    """An input collection that must be non-empty is empty."""

    code = "empty-input"


class InsufficientPoints(SpeedlawError):
    """Too few data points to carry out the construction."""

    code = "insufficient-points"


class ArbitrageViolation(SpeedlawError):
    """Call prices are not consistent with any probability measure."""

    code = "arbitrage-violation"


class NonfinitePotential(SpeedlawError):
    """A potential integral fails to converge to a finite value."""

    code = "nonfinite-potential"


class WronskianOutOfRange(SpeedlawError):
    """Requested Wronskian is not in the admissible interval (0, W_max]."""

    code = "wronskian-out-of-range"


class StartOutsideSupport(SpeedlawError):
    """Requested starting point lies outside the target support."""

    code = "start-outside-support"


class NonMonotoneMap(SpeedlawError):
    """A scale map is not strictly increasing on the support."""

    code = "non-monotone-map"


class IntegrationOverflow(SpeedlawError):
    """An eigenfunction extension overflowed before reaching the point."""

    code = "integration-overflow"


class GridDegenerate(SpeedlawError):
    """A simulation grid collapsed to too few usable sites."""

    code = "grid-degenerate"


class EngineMismatch(SpeedlawError):
    """The model violates a precondition of the requested engine."""

    code = "engine-mismatch"


class FormatError(SpeedlawError):
    """A serialized model or data file does not parse."""

    code = "format-error"
