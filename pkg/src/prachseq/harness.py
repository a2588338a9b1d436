"""Deterministic experiment runners behind the command-line interface.

Every runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` whose CSV form starts with ``#`` comment lines
echoing the configuration, followed by a header row and the data rows.
Randomness is derived per trial from ``(seed, tag, trial index)``, so output
does not depend on ``workers``.
"""

import csv
import dataclasses
import io
import os
import time
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version

import numpy as np
from joblib import Parallel, delayed

from .correlation import cfo_autocorrelation, periodic_correlation_fft
from .detection import (
    ThresholdTable,
    detection_count,
    false_alarm_rate,
    noise_statistics,
    threshold_from_statistics,
)
from .exceptions import ConfigError
from .metrics import OfdmMetrics, empirical_cdf
from .sequences import (
    FAMILIES,
    L_RA,
    family_root,
    generate_azc,
    generate_mall,
    generate_mzc,
    generate_zc,
    ncs_from_config,
    preamble_capacity,
    window_count,
)

SCHEMA_VERSION = 1
_EXECUTION_ONLY = ("out", "workers")
EXPERIMENTS = ("capacity", "correlate", "cfo_sweep", "calibrate", "detect_sweep", "papr_cm")

COLUMNS = {
    "capacity": ["family", "l_ra", "n_cs", "capacity"],
    "correlate": ["family", "reference", "other", "lag", "real", "imag", "magnitude"],
    "cfo_sweep": ["family", "sequence", "f0", "lag", "magnitude"],
    "calibrate": ["family", "n_ant", "eta", "p_false"],
    "detect_sweep": ["family", "n_ant", "snr_db", "trials", "p_detect", "std_err"],
    "papr_cm": ["family", "sequence_params", "papr_db", "cm_db"],
}

DEFAULT_CFO = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)

# Sequences named in the CFO figure: x_2^0, z_{1,2,0}, z_{1,1,2,1,0}, z_{1,2,1,0}
CFO_SEQUENCES = {
    "ZC": ("mu=2;v=0", lambda: generate_zc(2)),
    "mZC": ("l=1;mu=2;v=0", lambda: generate_mzc(1, 2)),
    "aZC": ("l=1;lam=1;w=2;mu=1;v=0", lambda: generate_azc(1, 1, 2, 1)),
    "mALL": ("l=1;lam=2;w=1;t=0", lambda: generate_mall(1, 2, 1, 0)),
}


def library_version():
    try:
        return version("artifact")
    except PackageNotFoundError:  # pragma: no cover
        return "0+unknown"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    families: tuple = FAMILIES
    l_ra: int = L_RA
    zczc: int = 11
    antennas: tuple = (1, 2, 4, 8)
    snr_start: float = -20.0
    snr_stop: float = 0.0
    snr_step: float = 0.5
    trials: int = 100_000
    seed: int = 0
    out: str = ""
    threshold_file: str = ""
    n_cs_list: tuple = (2, 23)
    cfo: tuple = DEFAULT_CFO
    subsample: int = 50_000
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not self.families:
            raise ConfigError("family list is empty")
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise ConfigError(f"unknown families {unknown}; expected a subset of {FAMILIES}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.antennas or any(a < 1 for a in self.antennas):
            raise ConfigError("antenna counts must be positive")
        if self.snr_step <= 0 or self.snr_stop < self.snr_start:
            raise ConfigError("snr grid must be increasing with a positive step")
        if self.workers == 0:
            raise ConfigError("workers must be non-zero")

    @property
    def n_cs(self):
        return ncs_from_config(self.zczc)

    def snr_grid(self):
        n = int(np.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return [round(self.snr_start + i * self.snr_step, 10) for i in range(n)]

    def echo(self):
        """``key=value`` lines in field order, parseable by :func:`parse_config_text`.

        ``out`` and ``workers`` are left out: they do not influence results
        and would otherwise break byte-identical reruns.
        """
        lines = []
        for f in dataclasses.fields(self):
            if f.name in _EXECUTION_ONLY:
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name}={value}")
        return lines


_FIELD_TYPES = {
    "families": (tuple, str), "antennas": (tuple, int), "n_cs_list": (tuple, int), "cfo": (tuple, float),
    "l_ra": int, "zczc": int, "trials": int, "seed": int, "subsample": int, "workers": int,
    "snr_start": float, "snr_stop": float, "snr_step": float,
    "experiment": str, "out": str, "threshold_file": str,
}
_ALIASES = {"family": "families", "zero_correlation_zone_config": "zczc", "n_cs": "n_cs_list"}


def coerce_config_values(raw):
    """Convert string values (from a config file or CLI) to config field types."""
    out = {}
    for key, value in raw.items():
        key = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        kind = _FIELD_TYPES[key]
        try:
            if isinstance(kind, tuple):
                items = value if isinstance(value, (list, tuple)) else str(value).split(",")
                out[key] = tuple(kind[1](str(v).strip()) for v in items if str(v).strip())
            else:
                out[key] = kind(value)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    return out


def parse_config_text(text):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno} is not key=value: {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return coerce_config_values(raw)


def load_config(path=None, **overrides):
    """Config from an optional file, with keyword overrides taking precedence."""
    values = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    values.update(coerce_config_values({k: v for k, v in overrides.items() if v is not None}))
    if "experiment" not in values:
        raise ConfigError("no experiment given")
    return ExperimentConfig(**values)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    columns: list
    rows: list
    elapsed_s: float = 0.0
    version: str = field(default_factory=library_version)
    extras: dict = field(default_factory=dict)

    def to_csv_text(self):
        buf = io.StringIO()
        buf.write(f"# prachseq {self.version} experiment={self.config.experiment} schema={SCHEMA_VERSION}\n")
        for line in self.config.echo():
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, path=None):
        path = path or self.config.out
        if not path:
            raise ConfigError("no output path configured")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())
        return path


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def read_result_csv(path):
    """Parse a result file back into ``(config_lines, header, rows)``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    meta = [l[2:] for l in lines if l.startswith("# ")]
    body = [l for l in lines if not l.startswith("#")]
    reader = list(csv.reader(body))
    return meta, reader[0], reader[1:]


def _timed(fn):
    def wrapper(cfg, *args, **kwargs):
        t0 = time.perf_counter()
        result = fn(cfg, *args, **kwargs)
        result.elapsed_s = time.perf_counter() - t0
        return result
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def run_capacity_report(l_ra=L_RA, n_cs_list=(2, 23), families=FAMILIES):
    """Rows ``(family, l_ra, n_cs, capacity)`` for every family and N_CS."""
    return [(f, l_ra, n_cs, preamble_capacity(f, l_ra, n_cs)) for n_cs in n_cs_list for f in families]


@_timed
def run_capacity(cfg):
    rows = run_capacity_report(cfg.l_ra, cfg.n_cs_list, cfg.families)
    return ExperimentResult(cfg, COLUMNS["capacity"], rows)


def _params_id(params):
    return ";".join(f"{k}={v}" for k, v in params.items())


@_timed
def run_correlation(cfg):
    """Correlate the first root of each family's cell set with every root.

    For mALL the ambiguous pair ``z_{1,1,21,21}`` is added.
    """
    n_roots = -(-64 // window_count(cfg.l_ra, cfg.n_cs))
    rows = []
    for family in cfg.families:
        ref, ref_params = family_root(family, 1, cfg.l_ra)
        others = [family_root(family, i, cfg.l_ra) for i in range(1, n_roots + 1)]
        if family == "mALL":
            others.append((generate_mall(1, 1, 21, 21, l_ra=cfg.l_ra), {"l": 1, "lam": 1, "w": 21, "t": 21}))
        for seq, params in others:
            prof = periodic_correlation_fft(ref, seq)
            for lag, r in enumerate(prof.values):
                rows.append((family, _params_id(ref_params), _params_id(params), lag,
                             float(r.real), float(r.imag), float(abs(r))))
    return ExperimentResult(cfg, COLUMNS["correlate"], rows)


@_timed
def run_cfo_sweep(cfg):
    """|R^{f0}[lag]| surface for the CFO reference sequence of each family."""
    rows = []
    for family in cfg.families:
        name, make = CFO_SEQUENCES[family]
        x = make()
        for f0 in cfg.cfo:
            mag = np.abs(cfo_autocorrelation(x, f0).values)
            rows.extend((family, name, float(f0), lag, float(m)) for lag, m in enumerate(mag))
    return ExperimentResult(cfg, COLUMNS["cfo_sweep"], rows)


@_timed
def run_calibration(cfg, min_trials=10_000):
    """Calibrate eta for every (family, antenna count); persists the table if configured."""
    if cfg.trials < min_trials:
        raise ConfigError(f"calibration needs at least {min_trials} trials, got {cfg.trials}")
    table = ThresholdTable()
    rows = []
    for family in cfg.families:
        for n_ant in cfg.antennas:
            stats = noise_statistics(family, n_ant, cfg.trials, cfg.seed, "calibrate", cfg.zczc, cfg.l_ra,
                                     n_jobs=cfg.workers)
            eta = threshold_from_statistics(stats)
            table[family, n_ant] = eta
            rows.append((family, n_ant, eta, false_alarm_rate(stats, eta)))
    if cfg.threshold_file:
        table.save(cfg.threshold_file)
    return ExperimentResult(cfg, COLUMNS["calibrate"], rows, extras={"table": table})


@_timed
def run_detection_sweep(cfg, table=None, min_trials=1):
    """P(detect) per (family, antennas, SNR) with its binomial standard error."""
    if cfg.trials < max(min_trials, 1):
        raise ConfigError(f"trials must be >= {max(min_trials, 1)}, got {cfg.trials}")
    if table is None:
        if not cfg.threshold_file or not os.path.exists(cfg.threshold_file):
            raise ConfigError("threshold file missing; run `calibrate` first or pass --threshold-file")
        table = ThresholdTable.load(cfg.threshold_file)
    rows = []
    for family in cfg.families:
        for n_ant in cfg.antennas:
            eta = table[family, n_ant]
            for snr in cfg.snr_grid():
                hits = detection_count(family, n_ant, snr, cfg.trials, eta, cfg.seed, cfg.zczc, cfg.l_ra,
                                       n_jobs=cfg.workers)
                p = hits / cfg.trials
                rows.append((family, n_ant, float(snr), cfg.trials, p, float(np.sqrt(p * (1 - p) / cfg.trials))))
    return ExperimentResult(cfg, COLUMNS["detect_sweep"], rows)


def crossing_snr(snrs, probabilities, level=0.99):
    """SNR at which P(detect) first reaches ``level``, by linear interpolation.

    Returns ``nan`` if the curve never reaches the level.
    """
    snrs = np.asarray(snrs, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    above = np.nonzero(p >= level)[0]
    if above.size == 0:
        return float("nan")
    i = above[0]
    if i == 0:
        return float(snrs[0])
    return float(snrs[i - 1] + (level - p[i - 1]) / (p[i] - p[i - 1]) * (snrs[i] - snrs[i - 1]))


def sequence_pool(family, l_ra=L_RA, n_cs=23):
    """Parameter tuples of the sequence population used for PAPR/CM statistics.

    * ZC: every root and cyclic shift.
    * mZC: the ZC population plus 70 m-sequence covers (cover shifts 0, 2, ...).
    * aZC: 70 Alltop powers ``l = 0, 2, ...`` (``lam = w = 1``) over the ZC population.
    * mALL: ``l = 1``, ``t = 1``, ``lam`` in 0..l_ra-2, ``w`` in 0..69 and every shift.
    """
    windows = window_count(l_ra, n_cs)
    zc = [(mu, v) for mu in range(1, l_ra) for v in range(windows)]
    if family == "ZC":
        return [("ZC", mu, v) for mu, v in zc]
    if family == "mZC":
        return [("ZC", mu, v) for mu, v in zc] + [
            ("mZC", l, mu, v) for l in range(0, l_ra, 2) for mu, v in zc
        ]
    if family == "aZC":
        return [("aZC", l, mu, v) for l in range(0, l_ra, 2) for mu, v in zc]
    if family == "mALL":
        return [("mALL", lam, w, v) for lam in range(l_ra - 1) for w in range(70) for v in range(windows)]
    raise ConfigError(f"unknown family {family!r}")


def _make_sequence(spec, l_ra, n_cs):
    kind = spec[0]
    if kind == "ZC":
        _, mu, v = spec
        return generate_zc(mu, v, n_cs, l_ra), f"mu={mu};v={v}"
    if kind == "mZC":
        _, l, mu, v = spec
        return generate_mzc(l, mu, v, n_cs, l_ra), f"l={l};mu={mu};v={v}"
    if kind == "aZC":
        _, l, mu, v = spec
        return generate_azc(l, 1, 1, mu, v, n_cs, l_ra), f"l={l};lam=1;w=1;mu={mu};v={v}"
    _, lam, w, v = spec
    return generate_mall(1, lam, w, 1, v, n_cs, l_ra), f"l=1;lam={lam};w={w};t=1;v={v}"


def _metric_batch(specs, l_ra, n_cs):
    seqs, names = zip(*(_make_sequence(s, l_ra, n_cs) for s in specs))
    values = OfdmMetrics().fit(np.asarray(seqs)).transform(np.asarray(seqs))
    return list(names), values


def select_subsample(pool_size, subsample, seed, family):
    """Sorted indices of a seeded subsample; the whole pool if it is small enough."""
    if subsample <= 0 or subsample >= pool_size:
        return np.arange(pool_size)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), sum(map(ord, family))]))
    return np.sort(rng.choice(pool_size, size=subsample, replace=False))


@_timed
def run_papr_cm(cfg, batch=1024):
    """PAPR and CM per sequence; CDFs and 50th/99th percentiles in ``extras``."""
    rows, cdfs, summary = [], {}, []
    for family in cfg.families:
        pool = sequence_pool(family, cfg.l_ra, cfg.n_cs)
        idx = select_subsample(len(pool), cfg.subsample, cfg.seed, family)
        specs = [pool[i] for i in idx]
        parts = Parallel(n_jobs=cfg.workers)(
            delayed(_metric_batch)(specs[a:a + batch], cfg.l_ra, cfg.n_cs) for a in range(0, len(specs), batch)
        )
        names = [n for part in parts for n in part[0]]
        values = np.concatenate([part[1] for part in parts])
        rows.extend((family, n, float(p), float(c)) for n, (p, c) in zip(names, values))
        for j, metric in enumerate(("papr", "cm")):
            curve = empirical_cdf(values[:, j])
            cdfs[family, metric] = curve
            summary.append((family, metric, len(specs), curve.percentile(50), curve.percentile(99)))
    return ExperimentResult(cfg, COLUMNS["papr_cm"], rows, extras={"cdfs": cdfs, "summary": summary})


def write_papr_cm_outputs(result, out):
    """Write the per-sequence CSV plus one CDF CSV per (family, metric) and a summary CSV."""
    result.write(out)
    stem, _ = os.path.splitext(out)
    paths = [out]
    for (family, metric), curve in result.extras["cdfs"].items():
        path = f"{stem}_cdf_{family}_{metric}.csv"
        curve.to_csv(path)
        paths.append(path)
    path = f"{stem}_summary.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["family", "metric", "n_sequences", "p50_db", "p99_db"])
        for row in result.extras["summary"]:
            writer.writerow([_fmt(v) for v in row])
    paths.append(path)
    return paths


RUNNERS = {
    "capacity": run_capacity,
    "correlate": run_correlation,
    "cfo_sweep": run_cfo_sweep,
    "calibrate": run_calibration,
    "detect_sweep": run_detection_sweep,
    "papr_cm": run_papr_cm,
}


def run(cfg):
    return RUNNERS[cfg.experiment](cfg)
