"""
Error types raised by the laboratory services.

The CLI maps ConfigError to exit code 2 and NumericalFailure to exit code 3.
"""


class LabError(Exception):
    """Base class for every error raised by the laboratory"""


class DomainError(LabError):
    """A point lies outside the interior of a surface or chart domain"""


class ParameterError(LabError):
    """A numeric parameter is out of its admissible range"""


class DegenerateConfigurationError(LabError):
    """Two surface points coincide, so the chord direction is undefined"""


class PreconditionError(LabError):
    """An operation was called outside its precondition"""


class SamplingError(LabError):
    """A Monte Carlo region received no samples"""


class UnsupportedError(LabError):
    """The requested surface has no conformal chart"""


class ConfigError(LabError):
    """Unknown surface or experiment kind, or a malformed spec file"""


class ValidationError(ConfigError):
    """Non-positive steps or horizons, or an empty ensemble"""


class NumericalFailure(LabError):
    """Too many paths were truncated by numerical breakdown"""
