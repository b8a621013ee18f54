"""Exception types raised by the odometry engine."""


class DFVOError(Exception):
    """Base class for all engine errors."""


class InsufficientMatchesError(DFVOError):
    """Fewer correspondences than the minimal solver requires."""


class NoConsensusError(DFVOError):
    """RANSAC could not find a hypothesis with enough inliers."""


class DegenerateEssentialError(DFVOError):
    """Essential matrix undefined, e.g. built from a zero translation."""


class InvalidEssentialError(DFVOError):
    """Matrix cannot be projected onto the essential manifold."""


class DegenerateTriangulationError(DFVOError):
    """Triangulation attempted with a (near-)zero baseline."""


class AlignmentFailedError(DFVOError):
    """Scale alignment had no usable triangulated/predicted depth pairs."""


class RasterFormatError(DFVOError):
    """Raster file has a bad magic, version, dtype or channel count."""


class RasterLengthError(DFVOError):
    """Raster payload size does not match the declared dimensions."""


class TrajectoryError(DFVOError):
    """Trajectory inputs are unusable (mismatched ids, too few frames)."""


class ConfigError(DFVOError):
    """Config file could not be parsed or contains unknown keys."""
