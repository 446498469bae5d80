"""Exception types shared across the package."""


class GendetectError(Exception):
    """Base class for all package errors."""


class ShapeError(GendetectError, ValueError):
    """Tensor or layer shapes are inconsistent; raised before any compute."""


class StaleTapeError(GendetectError, RuntimeError):
    """A backward pass was requested with a missing, foreign or outdated tape."""


class NotFittedError(GendetectError, RuntimeError):
    """A detector or head was used before ``fit``."""


class TrainingDivergedError(GendetectError, RuntimeError):
    """Training loss became non-finite."""


class CheckpointError(GendetectError, ValueError):
    """A checkpoint file is corrupt or inconsistent with its header."""


class DatasetFormatError(GendetectError, ValueError):
    """A dataset container fails validation."""


class CalibrationError(GendetectError, RuntimeError):
    """Severity calibration could not reach the target misclassification rate."""


class ConfigError(GendetectError, ValueError):
    """An experiment configuration is invalid or has unresolved references."""
