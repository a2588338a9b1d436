"""Periodic correlation, power-delay profiles and CFO-perturbed autocorrelation.

Lag convention: ``R_xy[tau] = sum_n x[n] conj(y[(n + tau) mod L])``. If the
received sequence is a root shifted by ``s`` (``x = cyclic_shift(y, s)``),
the correlation peak sits at ``tau = s``.
"""

import csv
from dataclasses import dataclass

import numpy as np

from ._validation import check_sequence


@dataclass
class CorrelationProfile:
    """Complex correlation value per lag plus identifiers of the two inputs."""

    values: np.ndarray
    source_ids: tuple = ("x", "y")

    def __len__(self):
        return len(self.values)

    @property
    def magnitude(self):
        return np.abs(self.values)

    def to_csv(self, path):
        """Write ``lag,real,imag,magnitude`` rows."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["lag", "real", "imag", "magnitude"])
            for lag, r in enumerate(self.values):
                writer.writerow([lag, repr(float(r.real)), repr(float(r.imag)), repr(float(abs(r)))])


def _pair(x, y):
    x = check_sequence(x, "x")
    y = check_sequence(y, "y")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    return x, y


def periodic_correlation_naive(x, y, source_ids=("x", "y")):
    """O(L^2) direct evaluation of the periodic correlation; reference path."""
    x, y = _pair(x, y)
    L = x.size
    idx = (np.arange(L)[:, None] + np.arange(L)[None, :]) % L  # [tau, n]
    values = (x[None, :] * np.conj(y[idx])).sum(axis=1)
    return CorrelationProfile(values, tuple(source_ids))


def correlate_fft(x, y):
    """Periodic correlation over the last axis via the DFT; broadcasts.

    Uses ``R = conj(IDFT(conj(X) * Y))``, which holds for any length,
    prime lengths included.
    """
    X = np.fft.fft(x, axis=-1)
    Y = np.fft.fft(y, axis=-1)
    return np.conj(np.fft.ifft(np.conj(X) * Y, axis=-1))


def periodic_correlation_fft(x, y, source_ids=("x", "y")):
    """Periodic correlation computed through the FFT."""
    x, y = _pair(x, y)
    return CorrelationProfile(correlate_fft(x, y), tuple(source_ids))


def power_delay_profile(corr):
    """Squared magnitude per lag of a correlation profile (or raw array)."""
    values = corr.values if isinstance(corr, CorrelationProfile) else np.asarray(corr)
    return values.real ** 2 + values.imag ** 2


def cfo_autocorrelation(x, f0, source_ids=("x", "x")):
    """Periodic autocorrelation of ``x`` after a CFO phase ramp of ``f0`` subcarriers.

    ``R[tau] = sum_n x[n] conj(x[(n + tau) mod L]) exp(j 2 pi f0 n / L)``.
    """
    x = check_sequence(x)
    f0 = float(f0)
    if not np.isfinite(f0):
        raise ValueError("f0 must be finite")
    L = x.size
    ramp = np.exp(2j * np.pi * f0 * np.arange(L) / L)
    return periodic_correlation_fft(x * ramp, x, source_ids)
