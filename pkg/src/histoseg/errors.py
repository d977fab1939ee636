"""Exception hierarchy.

The CLI maps `exit_code` to the process exit status: 1 for validation-type
failures, 2 for I/O-type failures (missing or corrupt files).
"""


class HistosegError(Exception):
    exit_code = 1


class FormatError(HistosegError):
    """Malformed on-disk artifact (metadata, model file, image)."""

    exit_code = 2


class ValidationError(HistosegError):
    """Input violates a declared invariant."""


class BoundsError(HistosegError):
    """Region outside the raster it is read from."""


class MagnificationError(HistosegError):
    """Requested magnification not resolvable from the pyramid."""


class AlignmentError(HistosegError):
    """Raster dimensions do not match between paired inputs."""


class GridError(HistosegError):
    """Tile grid cannot be built or a tile reference falls outside it."""


class CoverageError(HistosegError):
    """Stitch input does not cover every grid cell exactly once."""


class SampleError(HistosegError):
    """Training-set sampling preconditions not met."""


class ShapeError(HistosegError):
    """Tensor shape inconsistent with the network configuration."""


class StateError(HistosegError):
    """Operation called with stale or missing cached state."""


class SplitError(HistosegError):
    """Dataset split preconditions not met."""


class ConfigError(HistosegError):
    """Invalid pipeline or training configuration."""
