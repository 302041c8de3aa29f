"""Exception and warning types shared across the simulator."""


class ConfigurationError(ValueError):
    """A grid, component spec, or run configuration is unusable as given."""


class EncodingError(ValueError):
    """Weights or activations cannot be mapped onto drive waveforms."""


class FlatteningError(ValueError):
    """The stretched pulse cannot supply the requested flat-top."""

    def __init__(self, message: str, achievable_width: float):
        super().__init__(message)
        self.achievable_width = achievable_width


class CalibrationError(ValueError):
    """Reference readout unusable for normalization."""


class IncompleteRecordError(KeyError):
    """A scheduled slot has no recorded readout."""


class FormatError(ValueError):
    """A persisted file does not match its documented layout."""


class TrainingError(RuntimeError):
    """Optimization diverged or was given unusable data."""


class ValidationError(ValueError):
    """Pre-run configuration validation failed."""


class OracleBoundViolation(AssertionError):
    """A cross-check between independent computation paths exceeded its bound."""


class FarFieldWarning(UserWarning):
    """Accumulated dispersion too small for the asymptotic stretched-pulse form."""


class SliceTimingWarning(UserWarning):
    """Slices are too short for the DAC sample rate to resolve cleanly."""


class IntegrationWarning(UserWarning):
    """Signal energy may be clipped at the edge of an integration window."""
