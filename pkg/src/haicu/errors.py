"""Exception hierarchy shared across the package."""


class HaicuError(Exception):
    """Base class for all domain errors raised by this package."""


class SimplexViolationError(HaicuError):
    """A probability vector is too far off the simplex to repair."""


class InvalidParameterError(HaicuError):
    """A caller-supplied parameter is outside its documented range."""


class EmptySceneError(HaicuError):
    """A scene query referenced a timestep with no observed agents."""


class SceneFormatError(HaicuError):
    """A scene file failed to parse or violated a track invariant."""


class NonPSDError(HaicuError):
    """A covariance input is not positive semi-definite."""


class CheckpointError(HaicuError):
    """A model checkpoint is missing, corrupt, or incompatible."""


class DivergenceError(HaicuError):
    """Training produced a non-finite loss."""
