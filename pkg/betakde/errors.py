"""Exception types raised by betakde."""

from __future__ import annotations


class BetaKdeError(ValueError):
    """Base class for every error the library reports to callers."""


class InvalidParameterError(BetaKdeError):
    """A value object or operation received an out-of-range parameter."""


class IntegrationError(BetaKdeError):
    """A quadrature integrand produced a non-finite value."""

    def __init__(self, abscissa: float, value: float) -> None:
        super().__init__(f"Integrand is not finite at x={abscissa!r} (value {value!r}).")
        self.abscissa = abscissa
        self.value = value


class DegenerateScaleError(BetaKdeError):
    """The robust scale estimate of a sample is zero."""


class DegenerateObjectiveError(BetaKdeError):
    """A cross-validation estimate is non-positive everywhere."""


class UnboundedBandwidthError(BetaKdeError):
    """The curvature functional vanishes, so the optimal bandwidth is infinite."""


class IngestError(BetaKdeError):
    """An input file could not be turned into a sample."""

    def __init__(self, message: str, row: int | None = None) -> None:
        if row is not None:
            message = f"Row {row}: {message}"
        super().__init__(message)
        self.row = row


class MissingCellError(BetaKdeError):
    """A summary group has no usable trial records."""

    def __init__(self, key: tuple) -> None:
        super().__init__(f"No usable trial records for group {key!r}.")
        self.key = key
