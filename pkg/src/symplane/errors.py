"""Exception types shared across the toolkit.

Two broad families matter to callers (and to the CLI's exit codes):
validation errors (malformed input, out-of-range requests) and data errors
(inputs that are well-formed but geometrically unusable).
"""


class SymplaneError(Exception):
    """Base class for all library errors."""


class InvalidInputError(SymplaneError):
    """Malformed arguments: bad shapes, non-finite values, broken preconditions."""


class InvalidPlaneError(InvalidInputError):
    """A plane is unusable: zero-length or non-unit normal, non-finite entries."""


class OutOfBoundsError(InvalidInputError):
    """A pixel coordinate lies outside the image."""


class NoDepthError(InvalidInputError):
    """The depth map has no valid depth at the requested pixel."""


class InvalidBundleError(InvalidInputError):
    """A scene bundle is missing required files or they are inconsistent."""


class InsufficientDataError(SymplaneError):
    """Too few usable samples to produce a result."""


class DegenerateConfigurationError(SymplaneError):
    """Input with no unique solution: collinear points, self-symmetric pairs."""


class UndefinedMetricError(SymplaneError):
    """The requested metric is undefined for these inputs (typically empty sets)."""
