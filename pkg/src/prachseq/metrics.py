"""OFDM synthesis of preambles and envelope metrics (PAPR, cubic metric)."""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_int, check_sequence
from .exceptions import UndefinedMetricError
from .sequences import L_RA

CM_OFFSET_DB = 1.52
CM_SLOPE = 1.56


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM grid for preamble synthesis.

    ``mapping_start=None`` centres the ``l_ra`` preamble bins in the grid.
    """

    ifft_size: int = 4096
    cp_length: int = 288
    mapping_start: Optional[int] = None
    l_ra: int = L_RA

    @property
    def start(self):
        if self.mapping_start is None:
            return (self.ifft_size - self.l_ra) // 2
        return self.mapping_start

    def validate(self):
        check_int(self.ifft_size, "ifft_size", low=1)
        check_int(self.cp_length, "cp_length", low=0, high=self.ifft_size - 1)
        check_int(self.start, "mapping_start", low=0)
        if self.start + self.l_ra > self.ifft_size:
            raise ValueError(
                f"{self.l_ra} bins starting at {self.start} overflow an ifft of size {self.ifft_size}"
            )
        return self


def synthesize_ofdm(seq, cfg=OfdmConfig()):
    """Map the DFT of ``seq`` onto contiguous subcarriers and return the CP-prefixed symbol.

    Both transforms are unitary (``norm="ortho"``), so the energy of the
    symbol body equals the energy of ``seq``. Accepts a batch of sequences
    along the leading axes.
    """
    cfg.validate()
    x = np.asarray(seq, dtype=np.complex128)
    if x.shape[-1] != cfg.l_ra:
        raise ValueError(f"sequence length {x.shape[-1]} does not match l_ra={cfg.l_ra}")
    bins = np.fft.fft(x, axis=-1, norm="ortho")
    grid = np.zeros(x.shape[:-1] + (cfg.ifft_size,), dtype=np.complex128)
    grid[..., cfg.start : cfg.start + cfg.l_ra] = bins
    body = np.fft.ifft(grid, axis=-1, norm="ortho")
    if cfg.cp_length == 0:
        return body
    return np.concatenate([body[..., -cfg.cp_length :], body], axis=-1)


def _power(signal):
    s = np.asarray(signal)
    if s.shape[-1] == 0:
        raise UndefinedMetricError("empty signal")
    p = s.real ** 2 + s.imag ** 2 if np.iscomplexobj(s) else s.astype(np.float64) ** 2
    mean = p.mean(axis=-1)
    if np.any(mean == 0):
        raise UndefinedMetricError("signal has zero power")
    return p, mean


def papr(signal):
    """Peak-to-average power ratio in dB over the last axis."""
    p, mean = _power(signal)
    return 10.0 * np.log10(p.max(axis=-1) / mean)


def cubic_metric(signal):
    """Cubic metric in dB: ``(20 log10 rms(|x|/rms(x))**3 - 1.52) / 1.56``."""
    p, mean = _power(signal)
    norm_power = p / mean[..., None]
    rms_cubed = np.sqrt(np.mean(norm_power ** 3, axis=-1))
    return (20.0 * np.log10(rms_cubed) - CM_OFFSET_DB) / CM_SLOPE


class OfdmMetrics(TransformerMixin, BaseEstimator):
    """Transformer mapping preamble sequences to ``[papr_db, cm_db]`` rows.

    ``X`` has shape ``(n_sequences, l_ra)``. Fitting is a no-op apart from
    validating the grid parameters.
    """

    def __init__(self, ifft_size=4096, cp_length=288, mapping_start=None, batch_size=512):
        self.ifft_size = ifft_size
        self.cp_length = cp_length
        self.mapping_start = mapping_start
        self.batch_size = batch_size

    def fit(self, X=None, y=None):
        n = L_RA if X is None else np.asarray(X).shape[-1]
        self.config_ = OfdmConfig(self.ifft_size, self.cp_length, self.mapping_start, n).validate()
        return self

    def transform(self, X):
        if not hasattr(self, "config_"):
            self.fit(X)
        X = np.atleast_2d(np.asarray(X, dtype=np.complex128))
        out = np.empty((X.shape[0], 2))
        for start in range(0, X.shape[0], self.batch_size):
            sig = synthesize_ofdm(X[start : start + self.batch_size], self.config_)
            out[start : start + self.batch_size, 0] = papr(sig)
            out[start : start + self.batch_size, 1] = cubic_metric(sig)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["papr_db", "cm_db"], dtype=object)


@dataclass
class MetricSample:
    sequence_id: tuple
    papr_db: float
    cm_db: float


@dataclass
class CdfCurve:
    """Empirical CDF: ``probabilities[i] = P(metric <= values[i])``.

    ``counts`` holds the multiplicity of each distinct value so that curves
    built from separate batches merge exactly, in any order.
    """

    values: np.ndarray
    probabilities: np.ndarray
    counts: np.ndarray

    @property
    def n_samples(self):
        return int(self.counts.sum())

    def percentile(self, q):
        """Smallest value whose cumulative probability reaches ``q / 100``."""
        target = int(np.ceil(q / 100.0 * self.n_samples - 1e-9))
        i = int(np.searchsorted(np.cumsum(self.counts), max(target, 1), side="left"))
        return float(self.values[min(i, len(self.values) - 1)])

    def merge(self, other):
        values = np.concatenate([self.values, other.values])
        counts = np.concatenate([self.counts, other.counts])
        return _from_counts(values, counts)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["value_db", "cumulative_prob"])
            for v, p in zip(self.values, self.probabilities):
                writer.writerow([repr(float(v)), repr(float(p))])


def _from_counts(values, counts):
    uniq, inverse = np.unique(values, return_inverse=True)
    merged = np.bincount(inverse, weights=counts).astype(np.int64)
    cum = np.cumsum(merged)
    return CdfCurve(uniq, cum / cum[-1], merged)


def empirical_cdf(values):
    """Empirical CDF over the distinct sorted values of ``values``."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("cannot build a CDF from no samples")
    return _from_counts(values, np.ones(values.size, dtype=np.int64))


def metric_cdf(samples, which):
    """CDF of the ``"papr"`` or ``"cm"`` values of a list of :class:`MetricSample`."""
    if which not in ("papr", "cm"):
        raise ValueError(f"which must be 'papr' or 'cm', got {which!r}")
    samples = list(samples)
    if not samples:
        raise ValueError("cannot build a CDF from no samples")
    return empirical_cdf([getattr(s, f"{which}_db") for s in samples])
