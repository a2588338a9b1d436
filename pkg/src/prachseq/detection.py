"""Preamble detection: PDP accumulation, window thresholding and calibration.

Received trials are arrays of shape ``(n_trials, n_antennas, l_ra)``. Each
root's power-delay profile is summed over antennas (equal gain combining),
normalised by its own mean over all lags, split into ``floor(l_ra / n_cs)``
windows of ``n_cs`` lags (the remainder lags belong to no window) and compared
against a threshold ``eta``.
"""

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._seeding import chunk_ranges, trial_rng
from ._validation import check_int, check_received
from .exceptions import CalibrationError, ConfigError
from .sequences import FAMILIES, L_RA, build_preamble_set

THRESHOLD_GRID = np.round(np.arange(200, 9, -1) / 10.0, 1)  # 20.0 down to 1.0
TARGET_PFALSE = 1e-3
_CHUNK = 2000


@dataclass
class PdpMatrix:
    """Accumulated power-delay profiles, one row per root."""

    rows: np.ndarray
    antenna_count: int
    root_ids: tuple = ()


@dataclass
class DetectionOutcome:
    detected: bool
    root_index: Optional[int] = None
    window_index: Optional[int] = None
    peak_value: float = 0.0
    preamble_id: Optional[int] = None


def apply_awgn(x, snr_db, seed=None):
    """Add circularly-symmetric complex Gaussian noise of variance ``10**(-snr_db/10)``.

    ``seed`` may be an int, ``None`` or a ``numpy.random.Generator``. The
    variance is split equally between real and imaginary parts; the signal is
    assumed to have unit power per sample.
    """
    x = np.asarray(x, dtype=np.complex128)
    snr_db = float(snr_db)
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
    noise = rng.standard_normal((2,) + x.shape)
    return x + sigma * (noise[0] + 1j * noise[1])


def _pdp_batch(received, roots_fft):
    # received (T, A, L); roots_fft (R, L) -> (T, R, L)
    S = np.fft.fft(received, axis=-1)
    pdp = np.zeros((received.shape[0], roots_fft.shape[0], received.shape[-1]))
    for a in range(received.shape[1]):
        r = np.fft.ifft(np.conj(S[:, a, None, :]) * roots_fft[None], axis=-1)
        pdp += r.real ** 2 + r.imag ** 2
    return pdp


def accumulate_pdp(received, roots, root_ids=None):
    """Sum over antennas of ``|R_{s_i, k_mu}|**2`` for every root ``k_mu``.

    ``received`` holds one sequence per antenna (shape ``(A, L)``, or ``(L,)``
    for a single antenna).
    """
    roots = np.atleast_2d(np.asarray(roots, dtype=np.complex128))
    rx = check_received(received, roots.shape[-1])
    if rx.shape[0] != 1:
        raise ValueError("accumulate_pdp takes a single trial; use PreambleDetector for batches")
    rows = _pdp_batch(rx, np.fft.fft(roots, axis=-1))[0]
    if root_ids is None:
        root_ids = tuple(range(roots.shape[0]))
    return PdpMatrix(rows, rx.shape[1], tuple(root_ids))


def window_ratios(pdp, n_cs):
    """Window peaks divided by the row mean, shape ``(..., n_roots, n_windows)``.

    Rows with zero mean give zero ratios.
    """
    pdp = np.asarray(pdp, dtype=np.float64)
    L = pdp.shape[-1]
    n_cs = check_int(n_cs, "n_cs", low=1, high=L)
    windows = L // n_cs
    mean = pdp.mean(axis=-1, keepdims=True)
    peaks = pdp[..., : windows * n_cs].reshape(pdp.shape[:-1] + (windows, n_cs)).max(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mean > 0, peaks / np.where(mean > 0, mean, 1.0), 0.0)
    return ratio


def _valid_windows(n_roots, windows, n_preambles):
    ids = np.arange(n_roots * windows).reshape(n_roots, windows)
    return ids < n_preambles


def normalize_and_threshold(pdp, eta, n_cs, n_preambles=None):
    """Detection decision for one accumulated PDP matrix.

    With ``n_preambles`` set, only windows that map to a preamble of the set
    (``root * n_windows + window < n_preambles``) are searched. The reported
    (root, window) is the largest normalised peak; ties go to the lowest pair.
    """
    rows = pdp.rows if isinstance(pdp, PdpMatrix) else np.atleast_2d(pdp)
    if not eta > 0:
        raise ValueError("eta must be positive")
    ratio = window_ratios(rows, n_cs)
    n_roots, windows = ratio.shape
    if n_preambles is not None:
        ratio = np.where(_valid_windows(n_roots, windows, n_preambles), ratio, -np.inf)
    flat = int(np.argmax(ratio))
    peak = float(ratio.flat[flat])
    if peak < eta:
        return DetectionOutcome(False, peak_value=max(peak, 0.0))
    root, window = divmod(flat, windows)
    return DetectionOutcome(True, root, window, peak, flat)


class PreambleDetector(ClassifierMixin, BaseEstimator):
    """Correlation detector for one family's 64-preamble cell set.

    ``fit`` builds the preamble set. When ``threshold`` is ``None`` it also
    calibrates the threshold from noise-only training trials ``X`` so that the
    empirical false-alarm rate is at most ``target_pfalse``.

    ``predict`` returns the detected preamble number per trial, ``-1`` when
    nothing crosses the threshold; ``score`` is therefore the rate of correct
    identification.

    Parameters
    ----------
    family : {"ZC", "mZC", "aZC", "mALL"}
    threshold : float or None
        Normalised-peak threshold ``eta``.
    zero_correlation_zone_config : int
        Cyclic-shift configuration index (11 gives N_CS = 23).
    l_ra : int
    target_pfalse : float
        False-alarm target used only when calibrating.
    """

    def __init__(self, family="ZC", threshold=None, zero_correlation_zone_config=11,
                 l_ra=L_RA, target_pfalse=TARGET_PFALSE):
        self.family = family
        self.threshold = threshold
        self.zero_correlation_zone_config = zero_correlation_zone_config
        self.l_ra = l_ra
        self.target_pfalse = target_pfalse

    def fit(self, X=None, y=None):
        self.preamble_set_ = build_preamble_set(self.family, self.l_ra, self.zero_correlation_zone_config)
        self.roots_fft_ = np.fft.fft(self.preamble_set_.roots, axis=-1)
        self.n_preambles_ = len(self.preamble_set_.preambles)
        self.classes_ = np.arange(self.n_preambles_)
        if self.threshold is not None:
            if not self.threshold > 0:
                raise ValueError("threshold must be positive")
            self.threshold_ = float(self.threshold)
        else:
            if X is None:
                raise ValueError("noise-only trials X are required when threshold is None")
            stats = self.decision_function(X)
            self.threshold_ = threshold_from_statistics(stats, self.target_pfalse)
        return self

    def _ratios(self, X):
        rx = check_received(X, self.preamble_set_.l_ra)
        n_roots, windows = len(self.preamble_set_.roots), self.preamble_set_.window_count
        valid = _valid_windows(n_roots, windows, self.n_preambles_)
        out = np.empty((rx.shape[0], n_roots * windows))
        for start, stop in chunk_ranges(rx.shape[0], _CHUNK):
            r = window_ratios(_pdp_batch(rx[start:stop], self.roots_fft_), self.preamble_set_.n_cs)
            out[start:stop] = np.where(valid, r, -np.inf).reshape(stop - start, -1)
        return out

    def decision_function(self, X):
        """Largest normalised window peak per trial."""
        if not hasattr(self, "roots_fft_"):
            check_is_fitted(self, "roots_fft_")
        return self._ratios(X).max(axis=1)

    def predict(self, X):
        check_is_fitted(self, "threshold_")
        ratios = self._ratios(X)
        best = ratios.argmax(axis=1)
        detected = ratios[np.arange(len(best)), best] >= self.threshold_
        return np.where(detected, best, -1)

    def detect(self, received):
        """Full :class:`DetectionOutcome` for a single trial."""
        check_is_fitted(self, "threshold_")
        pdp = accumulate_pdp(received, self.preamble_set_.roots)
        return normalize_and_threshold(pdp, self.threshold_, self.preamble_set_.n_cs, self.n_preambles_)


def threshold_from_statistics(stats, target_pfalse=TARGET_PFALSE, grid=THRESHOLD_GRID):
    """Smallest grid threshold whose empirical false-alarm rate meets the target.

    ``stats`` holds the per-trial maximum normalised peak of noise-only
    trials; a trial raises a false alarm at ``eta`` when its statistic is
    ``>= eta``.
    """
    stats = np.sort(np.asarray(stats, dtype=np.float64))
    if stats.size == 0:
        raise CalibrationError("no noise-only trials to calibrate from")
    exceed = stats.size - np.searchsorted(stats, grid, side="left")
    ok = exceed / stats.size <= target_pfalse
    if not ok.any():
        raise CalibrationError(
            f"no threshold in [{grid.min()}, {grid.max()}] gives P(false) <= {target_pfalse}"
        )
    return float(grid[ok].min())


def _noise_chunk(family, antenna_count, seed, tag, start, stop, zczc, l_ra):
    det = PreambleDetector(family, threshold=1.0, zero_correlation_zone_config=zczc, l_ra=l_ra).fit()
    rx = np.empty((stop - start, antenna_count, l_ra), dtype=np.complex128)
    for i, trial in enumerate(range(start, stop)):
        z = trial_rng(seed, tag, trial).standard_normal((2, antenna_count, l_ra))
        rx[i] = (z[0] + 1j * z[1]) * np.sqrt(0.5)
    return det.decision_function(rx)


def noise_statistics(family, antenna_count, trials, seed=0, tag="calibrate",
                     zero_correlation_zone_config=11, l_ra=L_RA, n_jobs=1):
    """Per-trial maximum normalised peak on unit-variance noise-only input."""
    antenna_count = check_int(antenna_count, "antenna_count", low=1)
    trials = check_int(trials, "trials", low=1)
    tag = f"{tag}/{family}/{antenna_count}"
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_noise_chunk)(family, antenna_count, seed, tag, a, b, zero_correlation_zone_config, l_ra)
        for a, b in chunk_ranges(trials, _CHUNK)
    )
    return np.concatenate(parts)


def false_alarm_rate(stats, eta):
    return float(np.mean(np.asarray(stats) >= eta))


def calibrate_threshold(family, antenna_count, trials=100_000, target_pfalse=TARGET_PFALSE,
                        seed=0, zero_correlation_zone_config=11, l_ra=L_RA, n_jobs=1,
                        min_trials=10_000):
    """Calibrate ``eta`` for one (family, antenna count) from noise-only trials."""
    if trials < min_trials:
        raise ValueError(f"calibration needs at least {min_trials} trials, got {trials}")
    stats = noise_statistics(family, antenna_count, trials, seed, "calibrate",
                             zero_correlation_zone_config, l_ra, n_jobs)
    return threshold_from_statistics(stats, target_pfalse)


def _detect_chunk(family, antenna_count, snr_db, eta, seed, tag, start, stop, zczc, l_ra):
    det = PreambleDetector(family, threshold=eta, zero_correlation_zone_config=zczc, l_ra=l_ra).fit()
    preambles = det.preamble_set_.preambles
    sigma = np.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
    ids = np.empty(stop - start, dtype=np.int64)
    rx = np.empty((stop - start, antenna_count, l_ra), dtype=np.complex128)
    for i, trial in enumerate(range(start, stop)):
        rng = trial_rng(seed, tag, trial)
        ids[i] = rng.integers(len(preambles))
        z = rng.standard_normal((2, antenna_count, l_ra))
        rx[i] = preambles[ids[i]] + sigma * (z[0] + 1j * z[1])
    return int(np.count_nonzero(det.predict(rx) == ids))


def detection_count(family, antenna_count, snr_db, trials, eta, seed=0,
                    zero_correlation_zone_config=11, l_ra=L_RA, n_jobs=1):
    """Number of trials (out of ``trials``) identifying the transmitted preamble."""
    antenna_count = check_int(antenna_count, "antenna_count", low=1)
    trials = check_int(trials, "trials", low=1)
    tag = f"detect/{family}/{antenna_count}/{float(snr_db)!r}"
    counts = Parallel(n_jobs=n_jobs)(
        delayed(_detect_chunk)(family, antenna_count, float(snr_db), float(eta), seed, tag, a, b,
                               zero_correlation_zone_config, l_ra)
        for a, b in chunk_ranges(trials, _CHUNK)
    )
    return sum(counts)


def detection_probability(family, antenna_count, snr_db, trials, eta, seed=0,
                          zero_correlation_zone_config=11, l_ra=L_RA, n_jobs=1, min_trials=1_000):
    """Fraction of trials in which a uniformly drawn preamble is correctly identified."""
    if trials < min_trials:
        raise ValueError(f"detection_probability needs at least {min_trials} trials, got {trials}")
    return detection_count(family, antenna_count, snr_db, trials, eta, seed,
                           zero_correlation_zone_config, l_ra, n_jobs) / trials


@dataclass
class ThresholdTable:
    """Calibrated thresholds keyed by ``(family, antenna_count)``."""

    values: dict = field(default_factory=dict)

    def __setitem__(self, key, eta):
        family, antennas = key
        if family not in FAMILIES:
            raise ConfigError(f"unknown family {family!r}")
        if not eta > 0:
            raise ValueError("eta must be positive")
        self.values[(family, int(antennas))] = float(eta)

    def __getitem__(self, key):
        family, antennas = key
        try:
            return self.values[(family, int(antennas))]
        except KeyError:
            raise ConfigError(
                f"no threshold for family={family} antennas={antennas}; run `calibrate` first"
            ) from None

    def __contains__(self, key):
        return (key[0], int(key[1])) in self.values

    def __len__(self):
        return len(self.values)

    def save(self, path):
        """Write ``family,antennas,eta`` lines, sorted for reproducible output."""
        order = {f: i for i, f in enumerate(FAMILIES)}
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for (family, antennas), eta in sorted(self.values.items(), key=lambda kv: (order[kv[0][0]], kv[0][1])):
                writer.writerow([family, antennas, repr(eta)])

    @classmethod
    def load(cls, path):
        table = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].startswith("#") or row[0] == "family":
                    continue
                family, antennas, eta = row
                table[family, int(antennas)] = float(eta)
        return table
