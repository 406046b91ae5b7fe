"""Exception hierarchy shared across the package."""


class MirsError(Exception):
    """Base class for all errors raised by mirs."""


class ConfigurationError(MirsError, ValueError):
    """Invalid parameters (group counts, stream paths, alpha, ...)."""


class InputError(MirsError, ValueError):
    """Malformed input data. ``row`` is the 1-based data row, when known."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class MaskError(MirsError):
    """An estimator tried to read outcome values that are still masked."""


class FitError(MirsError):
    """Logistic regression could not be fitted."""


class ImputationError(MirsError):
    """The imputation model cannot be built from the complete cases."""


class EstimationError(MirsError):
    """Blending weights or a replicate estimate could not be computed."""


class DegenerateSampleError(MirsError):
    """A simulated sample is unusable and must be regenerated."""


class StudyError(MirsError):
    """A Monte Carlo study failed too often to be reported."""
