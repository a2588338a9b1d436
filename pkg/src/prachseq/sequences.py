"""Preamble sequence families for short (139-sample) random-access preambles.

All sequences are plain 1-D ``complex128`` numpy arrays. Cyclic shifts follow
``x^s[n] = x[(n + s) mod L]``, i.e. a shift by ``s`` is ``np.roll(x, -s)``.

Families:

* ``ZC``   -- Zadoff-Chu root ``mu`` shifted by ``v * n_cs``.
* ``mZC``  -- ZC covered by a bipolar m-sequence.
* ``aZC``  -- ZC covered by a powered Alltop (cubic phase) sequence.
* ``mALL`` -- powered Alltop sequence covered by an m-sequence, then shifted.
"""

import csv
import struct
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from ._validation import check_int, check_sequence
from .exceptions import ConfigError

L_RA = 139
FAMILIES = ("ZC", "mZC", "aZC", "mALL")
PREAMBLES_PER_CELL = 64

# zeroCorrelationZoneConfig -> N_CS for L_RA = 139 (unrestricted set).
# Config 0 (N_CS = 0, a single shift per root) is not supported.
NCS_TABLE = {
    1: 2, 2: 4, 3: 6, 4: 8, 5: 10, 6: 12, 7: 13, 8: 15,
    9: 17, 10: 19, 11: 23, 12: 27, 13: 34, 14: 46, 15: 69,
}

# P^7 + P + 1, coefficients g_7 .. g_0
DEFAULT_TAPS = (1, 0, 0, 0, 0, 0, 1, 1)


def ncs_from_config(zero_correlation_zone_config):
    """Map a zeroCorrelationZoneConfig index to the cyclic shift N_CS."""
    try:
        return NCS_TABLE[zero_correlation_zone_config]
    except (KeyError, TypeError):
        raise ConfigError(
            f"unknown zeroCorrelationZoneConfig {zero_correlation_zone_config!r}; "
            f"supported values are {min(NCS_TABLE)}..{max(NCS_TABLE)}"
        ) from None


def window_count(l_ra, n_cs):
    """Number of whole N_CS windows (cyclic shifts) that fit in ``l_ra`` samples."""
    l_ra = check_int(l_ra, "l_ra", low=2)
    n_cs = check_int(n_cs, "n_cs", low=1, high=l_ra)
    return l_ra // n_cs


def cyclic_shift(x, shift):
    """Return ``x[(n + shift) mod L]``."""
    x = np.asarray(x)
    return np.roll(x, -int(shift) % x.shape[-1], axis=-1)


def _check_shift(v, n_cs, l_ra):
    n_cs = check_int(n_cs, "n_cs", low=1, high=l_ra)
    return check_int(v, "v", low=0, high=l_ra // n_cs - 1) * n_cs


def generate_zc(mu, v=0, n_cs=1, l_ra=L_RA):
    """Zadoff-Chu root ``mu`` cyclically shifted by ``v * n_cs`` samples.

    ``x_mu[n] = exp(-j pi mu n (n + 1) / l_ra)``. The phase index is reduced
    modulo ``2 * l_ra`` in integer arithmetic so that large ``n`` costs no
    precision.
    """
    l_ra = check_int(l_ra, "l_ra", low=2)
    mu = check_int(mu, "mu", low=1, high=l_ra - 1)
    if gcd(mu, l_ra) != 1:
        raise ValueError(f"root mu={mu} is not coprime with l_ra={l_ra}")
    shift = _check_shift(v, n_cs, l_ra)
    n = np.arange(l_ra, dtype=np.int64)
    k = (mu * n * (n + 1)) % (2 * l_ra)
    return cyclic_shift(np.exp(-1j * np.pi * k / l_ra), shift)


def lfsr_bits(order=7, taps=DEFAULT_TAPS, initial_state=None):
    """One period of a Fibonacci LFSR as a 0/1 array of length ``2**order - 1``.

    ``taps`` holds the polynomial coefficients ``g_m .. g_0``. The register
    starts from ``initial_state`` (all ones by default) and produces
    ``s[k + m] = XOR_i g_i s[k + i]`` for ``i < m``; the oldest stage is
    emitted first.

    Raises ``ValueError`` when the polynomial is not of the form
    ``g_m = g_0 = 1``, the state is all zero, or the output period is not
    maximal (non-primitive taps).
    """
    order = check_int(order, "order", low=1, high=31)
    taps = tuple(int(t) for t in taps)
    if len(taps) != order + 1 or any(t not in (0, 1) for t in taps):
        raise ValueError(f"taps must be {order + 1} bits g_{order}..g_0, got {taps}")
    if taps[0] != 1 or taps[-1] != 1:
        raise ValueError("taps must have g_m = 1 and g_0 = 1")
    if initial_state is None:
        initial_state = (1,) * order
    state = [int(b) for b in initial_state]
    if len(state) != order or any(b not in (0, 1) for b in state):
        raise ValueError(f"initial_state must be {order} bits")
    if not any(state):
        raise ValueError("initial_state must not be all zero")

    # g_0 .. g_{m-1} weight stages s[k] .. s[k+m-1]
    feedback = [i for i in range(order) if taps[order - i]]
    period = (1 << order) - 1
    start = tuple(state)
    out = np.empty(period, dtype=np.int8)
    for k in range(period):
        out[k] = state[0]
        new = 0
        for i in feedback:
            new ^= state[i]
        state = state[1:] + [new]
        if k < period - 1 and tuple(state) == start:
            raise ValueError(f"taps {taps} are not primitive: period {k + 1} < {period}")
    return out


def generate_mseq(order=7, taps=DEFAULT_TAPS, initial_state=None, shift=0, extend_to=None):
    """Bipolar m-sequence (bit ``b`` -> ``(-1)**b``) as a complex array.

    Without ``extend_to`` the native sequence of length ``2**order - 1`` is
    returned, cyclically shifted by ``shift``. With ``extend_to`` the native
    sequence is first extended by appending its own leading samples and the
    shift is then applied modulo the extended length.
    """
    bits = lfsr_bits(order, taps, initial_state)
    native = bits.size
    if extend_to is not None:
        extend_to = check_int(extend_to, "extend_to")
        if extend_to < native:
            raise ValueError(f"extend_to={extend_to} is shorter than the native length {native}")
        reps = -(-extend_to // native)
        bits = np.tile(bits, reps)[:extend_to]
    shift = check_int(shift, "shift", low=0, high=bits.size - 1)
    return cyclic_shift(1.0 - 2.0 * bits.astype(np.float64), shift).astype(np.complex128)


def _cover_mseq(t, l_ra):
    # extended length-l_ra cover built from the order-7 sequence
    return generate_mseq(7, DEFAULT_TAPS, shift=t, extend_to=l_ra)


def generate_alltop(lam, w, l=1, l_ra=L_RA):
    """Powered Alltop sequence ``exp(-j 2 pi l ((n + w)**3 + lam n) / l_ra)``.

    ``l = 0`` yields exactly ``1 + 0j`` everywhere.
    """
    l_ra = check_int(l_ra, "l_ra", low=2)
    lam = check_int(lam, "lam", low=0, high=l_ra - 1)
    w = check_int(w, "w", low=0, high=l_ra - 1)
    l = check_int(l, "l", low=0, high=l_ra - 1)
    n = np.arange(l_ra, dtype=np.int64)
    k = (((n + w) ** 3 + lam * n) % l_ra * l) % l_ra
    return np.exp(-2j * np.pi * k / l_ra)


def generate_mzc(l, mu, v=0, n_cs=1, l_ra=L_RA):
    """ZC sequence covered by the m-sequence shifted by ``l``.

    Only the ZC factor carries the ``v * n_cs`` shift.
    """
    l = check_int(l, "l", low=0, high=l_ra - 1)
    return _cover_mseq(l, l_ra) * generate_zc(mu, v, n_cs, l_ra)


def generate_azc(l, lam, w, mu, v=0, n_cs=1, l_ra=L_RA):
    """ZC sequence covered by the Alltop sequence raised to the power ``l``."""
    return generate_alltop(lam, w, l, l_ra) * generate_zc(mu, v, n_cs, l_ra)


def generate_mall(l, lam, w, t, v=0, n_cs=1, l_ra=L_RA):
    """mALL sequence: powered Alltop times m-sequence cover, shifted by ``v * n_cs``."""
    t = check_int(t, "t", low=0, high=l_ra - 1)
    shift = _check_shift(v, n_cs, l_ra)
    return cyclic_shift(generate_alltop(lam, w, l, l_ra) * _cover_mseq(t, l_ra), shift)


def family_root(family, index, l_ra=L_RA):
    """Root sequence ``index`` (1-based) of a family's 64-preamble cell set.

    Roots follow the cell-set table: ZC uses ``mu = index``; mZC fixes
    ``l = 1``; aZC fixes ``l = lam = w = 1``; mALL fixes ``l = w = t = 1``
    and steps ``lam``.
    """
    if family == "ZC":
        return generate_zc(index, l_ra=l_ra), {"mu": index}
    if family == "mZC":
        return generate_mzc(1, index, l_ra=l_ra), {"l": 1, "mu": index}
    if family == "aZC":
        return generate_azc(1, 1, 1, index, l_ra=l_ra), {"l": 1, "lam": 1, "w": 1, "mu": index}
    if family == "mALL":
        return generate_mall(1, index, 1, 1, l_ra=l_ra), {"l": 1, "lam": index, "w": 1, "t": 1}
    raise ConfigError(f"unknown family {family!r}; expected one of {FAMILIES}")


@dataclass(frozen=True)
class PreambleSet:
    """The 64 preambles of one cell and the roots the detector correlates against.

    Preamble ``i`` is root ``i // window_count`` shifted by
    ``(i % window_count) * n_cs`` samples.
    """

    family: str
    n_cs: int
    window_count: int
    roots: np.ndarray
    preambles: np.ndarray
    root_params: tuple = field(default=())

    @property
    def l_ra(self):
        return self.roots.shape[1]

    def root_index(self, preamble_id):
        return preamble_id // self.window_count

    def window_index(self, preamble_id):
        return preamble_id % self.window_count

    def preamble_id(self, root_index, window_index):
        """Preamble number for a (root, window) pair, or ``None`` if not in the set."""
        pid = root_index * self.window_count + window_index
        return pid if 0 <= window_index < self.window_count and pid < len(self.preambles) else None


def build_preamble_set(family, l_ra=L_RA, zero_correlation_zone_config=11, n_preambles=PREAMBLES_PER_CELL):
    """Build a cell's preamble set for ``family``.

    Roots are enumerated outer and shifts ``v = 0 .. window_count - 1`` inner;
    the enumeration is truncated at ``n_preambles``.
    """
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}; expected one of {FAMILIES}")
    n_cs = ncs_from_config(zero_correlation_zone_config)
    windows = window_count(l_ra, n_cs)
    n_roots = -(-n_preambles // windows)
    if n_roots > l_ra - 1:
        raise ConfigError(f"{n_preambles} preambles need {n_roots} roots; only {l_ra - 1} exist")
    roots, params = zip(*(family_root(family, i, l_ra) for i in range(1, n_roots + 1)))
    roots = np.array(roots)
    preambles = np.array([
        cyclic_shift(roots[r], v * n_cs) for r in range(n_roots) for v in range(windows)
    ][:n_preambles])
    return PreambleSet(family, n_cs, windows, roots, preambles, tuple(params))


def preamble_capacity(family, l_ra=L_RA, n_cs=2):
    """Total number of distinct preambles a family supplies for ``l_ra`` and ``n_cs``.

    >>> preamble_capacity("ZC", 139, 2)
    9522
    >>> preamble_capacity("mALL", 139, 2)
    185307711
    """
    windows = window_count(l_ra, n_cs)
    if family == "ZC":
        return (l_ra - 1) * windows
    if family in ("mZC", "aZC"):
        return (l_ra * l_ra - 1) * windows
    if family == "mALL":
        return l_ra ** 3 * windows
    raise ConfigError(f"unknown family {family!r}; expected one of {FAMILIES}")


def write_sequence_csv(path, x):
    """Write ``x`` as CSV with columns ``index,real,imag``."""
    x = check_sequence(x)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "real", "imag"])
        for i, s in enumerate(x):
            writer.writerow([i, repr(float(s.real)), repr(float(s.imag))])


def read_sequence_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([complex(float(r["real"]), float(r["imag"])) for r in rows])


def sequence_to_bytes(x):
    """Little-endian uint32 length followed by interleaved real/imag float64."""
    x = check_sequence(x)
    body = np.empty(2 * x.size, dtype="<f8")
    body[0::2] = x.real
    body[1::2] = x.imag
    return struct.pack("<I", x.size) + body.tobytes()


def sequence_from_bytes(data):
    (n,) = struct.unpack_from("<I", data)
    if len(data) != 4 + 16 * n:
        raise ValueError(f"record declares {n} samples but holds {(len(data) - 4) / 16:g}")
    body = np.frombuffer(data, dtype="<f8", offset=4)
    return body[0::2] + 1j * body[1::2]


def write_sequence_binary(path, x):
    with open(path, "wb") as fh:
        fh.write(sequence_to_bytes(x))


def read_sequence_binary(path):
    with open(path, "rb") as fh:
        return sequence_from_bytes(fh.read())
