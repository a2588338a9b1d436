class ConfigError(ValueError):
    """Raised when an experiment or preamble configuration cannot be resolved."""


class CalibrationError(RuntimeError):
    """Raised when no threshold on the search grid meets the false-alarm target."""


class UndefinedMetricError(ValueError):
    """Raised when a waveform metric is undefined for the given signal (zero power)."""
