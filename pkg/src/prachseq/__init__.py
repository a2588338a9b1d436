"""Random-access preamble sequences (ZC, mZC, aZC, mALL), their correlation
detector, and waveform metrics."""

from .correlation import (
    CorrelationProfile,
    cfo_autocorrelation,
    periodic_correlation_fft,
    periodic_correlation_naive,
    power_delay_profile,
)
from .detection import (
    DetectionOutcome,
    PdpMatrix,
    PreambleDetector,
    ThresholdTable,
    accumulate_pdp,
    apply_awgn,
    calibrate_threshold,
    detection_probability,
    normalize_and_threshold,
)
from .exceptions import CalibrationError, ConfigError, UndefinedMetricError
from .metrics import CdfCurve, MetricSample, OfdmConfig, OfdmMetrics, cubic_metric, metric_cdf, papr, synthesize_ofdm
from .sequences import (
    FAMILIES,
    L_RA,
    PreambleSet,
    build_preamble_set,
    cyclic_shift,
    generate_alltop,
    generate_mall,
    generate_mseq,
    generate_azc,
    generate_mzc,
    generate_zc,
    preamble_capacity,
)

__all__ = [name for name in dir() if not name.startswith("_")]

