"""Exception hierarchy for the UV scattering channel engine."""
from typing import Optional


EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_RANGE = 3
EXIT_NUMERIC = 4


class UVScatterError(Exception):
    """Base class for all errors raised by uvscatter."""

    exit_code = EXIT_FAILURE


class ConfigError(UVScatterError, ValueError):
    """Run configuration is missing, malformed, or inconsistent."""

    exit_code = EXIT_CONFIG


class DomainError(UVScatterError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = EXIT_NUMERIC


class InvalidAtmosphereError(DomainError):
    """Atmospheric coefficients cannot describe a scattering medium."""


class DegenerateGeometryError(DomainError):
    """Scattering point coincides with the receiver (l' = 0)."""


class TransmitterCollocatedError(DomainError):
    """Receiver sits on (or too close to) the transmitter."""


class DegenerateAxisError(DomainError):
    """Canonical elevation has sin(beta) = 0, so no standard form exists."""


class TableRangeError(UVScatterError, ValueError):
    """Query falls outside the range covered by a gain table."""

    exit_code = EXIT_RANGE

    def __init__(self, message: str, axis: str, beam_index: Optional[int] = None):
        if beam_index is not None:
            message = f"{message} (beam {beam_index})"
        super().__init__(message)
        self.axis = axis
        self.beam_index = beam_index


class EmptyContourError(UVScatterError, ValueError):
    """Requested level does not cross the field."""

    exit_code = EXIT_RANGE


class QuadratureError(UVScatterError, ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""

    exit_code = EXIT_NUMERIC

    def __init__(self, message: str, estimate: float, error_bound: float,
                 r: Optional[float] = None, alpha: Optional[float] = None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound
        self.r = r
        self.alpha = alpha

    def at(self, r: float, alpha: float) -> 'QuadratureError':
        """Return a copy of this error tagged with a table node."""
        message = f"{self.args[0]} at table node r={r:g} m, alpha={alpha:.6g} rad"
        return QuadratureError(message, self.estimate, self.error_bound, r=r, alpha=alpha)


class TableFormatError(UVScatterError, ValueError):
    """Gain table file is not a well-formed UVGT file."""

    exit_code = EXIT_NUMERIC

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TableCorruptionError(UVScatterError, ValueError):
    """Gain table file failed its checksum."""

    exit_code = EXIT_NUMERIC


class NonEllipticFitError(UVScatterError, ArithmeticError):
    """Least-squares solution does not describe an ellipse."""

    exit_code = EXIT_NUMERIC


class DegenerateDataError(UVScatterError, ArithmeticError):
    """Points do not determine the ellipse parameters."""

    exit_code = EXIT_NUMERIC


class AxisOrientationError(UVScatterError, ArithmeticError):
    """Fitted ellipse has its major axis along X rather than Y."""

    exit_code = EXIT_NUMERIC
