import cmath
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prachseq import sequences as sq
from prachseq.exceptions import ConfigError

from conftest import brute_correlation

L = 139
SQRT_L = np.sqrt(L)


def test_zc_first_sample_is_one():
    x = sq.generate_zc(1)
    assert x[0] == 1 + 0j


def test_zc_matches_closed_form():
    x = sq.generate_zc(5)
    expected = [cmath.exp(-1j * cmath.pi * 5 * n * (n + 1) / L) for n in range(L)]
    np.testing.assert_allclose(x, expected, atol=1e-12)


def test_zc_zero_shift_is_identity():
    np.testing.assert_array_equal(sq.generate_zc(2, 0, 23), sq.generate_zc(2))


def test_zc_shift_follows_definition():
    root = sq.generate_zc(7)
    shifted = sq.generate_zc(7, v=2, n_cs=23)
    for n in range(L):
        assert shifted[n] == root[(n + 46) % L]


def test_zc_ideal_autocorrelation_root_1():
    r = np.abs(brute_correlation(sq.generate_zc(1), sq.generate_zc(1)))
    assert r[0] == pytest.approx(139, abs=1e-9)
    assert r[1:].max() < 1e-9


@pytest.mark.parametrize("kwargs", [dict(mu=0), dict(mu=139), dict(mu=1, v=6, n_cs=23), dict(mu=1, v=-1)])
def test_zc_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        sq.generate_zc(**kwargs)


def test_lfsr_hand_simulated_order_3():
    # s[k+3] = s[k+1] ^ s[k] from 111: 1110010
    bits = sq.lfsr_bits(3, (1, 0, 1, 1))
    assert bits.tolist() == [1, 1, 1, 0, 0, 1, 0]


@pytest.mark.parametrize("order,taps", [(3, (1, 0, 1, 1)), (7, sq.DEFAULT_TAPS)])
def test_mseq_has_exact_maximal_period(order, taps):
    bits = sq.lfsr_bits(order, taps)
    period = 2 ** order - 1
    assert bits.size == period
    assert bits.sum() == 2 ** (order - 1)
    # no shorter period divides the sequence
    for p in range(1, period):
        if period % p == 0:
            assert not np.array_equal(np.roll(bits, p), bits)
    # two-valued periodic autocorrelation of the bipolar form
    x = 1.0 - 2.0 * bits
    r = brute_correlation(x, x).real
    assert r[0] == period
    np.testing.assert_allclose(r[1:], -1.0)


def test_mseq_native_length_127():
    assert sq.generate_mseq(7, sq.DEFAULT_TAPS).size == 127


def test_mseq_extension_repeats_head():
    x = sq.generate_mseq(7, sq.DEFAULT_TAPS, extend_to=139)
    assert x.size == 139
    np.testing.assert_array_equal(x[127:], x[:12])


def test_mseq_is_bipolar():
    x = sq.generate_mseq(shift=5, extend_to=139)
    assert set(np.unique(x.real)) == {-1.0, 1.0}
    assert np.all(x.imag == 0)


def test_mseq_shift_on_extended_sequence():
    base = sq.generate_mseq(extend_to=139)
    np.testing.assert_array_equal(sq.generate_mseq(shift=20, extend_to=139), np.roll(base, -20))


def test_mseq_errors():
    with pytest.raises(ValueError, match="all zero"):
        sq.lfsr_bits(3, (1, 0, 1, 1), initial_state=(0, 0, 0))
    with pytest.raises(ValueError, match="shorter"):
        sq.generate_mseq(extend_to=100)
    with pytest.raises(ValueError, match="not primitive"):
        sq.lfsr_bits(4, (1, 0, 1, 0, 1))  # P^4 + P^2 + 1 = (P^2 + P + 1)^2
    with pytest.raises(ValueError, match="g_m = 1"):
        sq.lfsr_bits(3, (1, 0, 1, 0))


def test_alltop_zero_parameters():
    assert sq.generate_alltop(0, 0, 1)[0] == 1 + 0j


def test_alltop_closed_form():
    lam, w, l = 3, 7, 2
    got = sq.generate_alltop(lam, w, l)
    expected = [cmath.exp(-2j * cmath.pi * l * ((n + w) ** 3 + lam * n) / L) for n in range(L)]
    np.testing.assert_allclose(got, expected, atol=1e-9)


def test_alltop_orthogonal_in_lambda():
    a = sq.generate_alltop(1, 4, 1)
    b = sq.generate_alltop(2, 4, 1)
    assert abs(np.vdot(b, a)) < 1e-9


def test_alltop_cross_correlation_in_w():
    # w only rotates the sequence, so the zero-lag product is a Gauss sum of
    # magnitude sqrt(L) while the full peak appears at lag w' - w
    r = np.abs(brute_correlation(sq.generate_alltop(1, 0, 1), sq.generate_alltop(1, 3, 1)))
    assert r[0] == pytest.approx(SQRT_L, abs=1e-6)
    assert r[L - 3] == pytest.approx(L, abs=1e-9)


def test_alltop_power_zero_is_exactly_one():
    assert np.all(sq.generate_alltop(5, 9, 0) == 1 + 0j)


def test_azc_power_zero_reduces_to_zc():
    np.testing.assert_array_equal(sq.generate_azc(0, 5, 9, 3, 2, 23), sq.generate_zc(3, 2, 23))


def test_mzc_autocorrelation_peak():
    x = sq.generate_mzc(1, 2)
    assert brute_correlation(x, x)[0].real == pytest.approx(139, abs=1e-9)


def test_mzc_is_cover_times_shifted_zc():
    cover = sq.generate_mseq(shift=4, extend_to=139)
    np.testing.assert_array_equal(sq.generate_mzc(4, 9, 3, 23), cover * sq.generate_zc(9, 3, 23))


def test_mall_structure():
    alltop = sq.generate_alltop(2, 5, 3)
    cover = sq.generate_mseq(shift=7, extend_to=139)
    np.testing.assert_array_equal(sq.generate_mall(3, 2, 5, 7, v=1, n_cs=23), np.roll(alltop * cover, -23))


def test_mall_autocorrelation_peak():
    x = sq.generate_mall(1, 1, 1, 1)
    assert abs(brute_correlation(x, x)[0]) == pytest.approx(139, abs=1e-9)


def test_mall_ambiguous_pair():
    a = sq.generate_mall(1, 1, 1, 1)
    b = sq.generate_mall(1, 1, 21, 21)
    assert np.abs(brute_correlation(a, b)).max() == pytest.approx(139, abs=1e-9)


families = st.sampled_from(["zc", "alltop", "mzc", "azc", "mall"])
idx = st.integers(0, L - 1)


@settings(max_examples=60, deadline=None)
@given(kind=families, a=idx, b=idx, c=idx, d=idx, v=st.integers(0, 5))
def test_unit_modulus(kind, a, b, c, d, v):
    mu = max(a, 1)
    x = {
        "zc": lambda: sq.generate_zc(mu, v, 23),
        "alltop": lambda: sq.generate_alltop(a, b, c),
        "mzc": lambda: sq.generate_mzc(b, mu, v, 23),
        "azc": lambda: sq.generate_azc(b, c, d, mu, v, 23),
        "mall": lambda: sq.generate_mall(a, b, c, d, v, 23),
    }[kind]()
    assert x.shape == (L,)
    np.testing.assert_allclose(np.abs(x), 1.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(a=st.integers(-300, 300), b=st.integers(-300, 300))
def test_shift_algebra(a, b):
    x = sq.generate_zc(3)
    np.testing.assert_array_equal(sq.cyclic_shift(sq.cyclic_shift(x, a), b), sq.cyclic_shift(x, (a + b) % L))


def test_shift_by_zero_and_length_are_identity():
    x = sq.generate_mall(1, 2, 3, 4)
    np.testing.assert_array_equal(sq.cyclic_shift(x, 0), x)
    np.testing.assert_array_equal(sq.cyclic_shift(x, L), x)


@pytest.mark.parametrize("family", sq.FAMILIES)
def test_preamble_set_structure(family):
    ps = sq.build_preamble_set(family, 139, 11)
    assert ps.n_cs == 23
    assert ps.window_count == 6
    assert len(ps.preambles) == 64
    assert len(ps.roots) == 11
    for i, p in enumerate(ps.preambles):
        r, v = divmod(i, 6)
        np.testing.assert_array_equal(p, np.roll(ps.roots[r], -23 * v))
        assert ps.preamble_id(r, v) == i


def test_preamble_set_roots_follow_cell_table():
    ps = sq.build_preamble_set("mALL")
    assert ps.root_params[0] == {"l": 1, "lam": 1, "w": 1, "t": 1}
    assert ps.root_params[10]["lam"] == 11
    np.testing.assert_array_equal(ps.roots[4], sq.generate_mall(1, 5, 1, 1))
    zc = sq.build_preamble_set("ZC")
    np.testing.assert_array_equal(zc.roots[10], sq.generate_zc(11))
    assert sq.build_preamble_set("ZC").preamble_id(10, 4) is None


def test_preamble_set_unknown_config():
    with pytest.raises(ConfigError):
        sq.build_preamble_set("ZC", 139, 99)
    with pytest.raises(ConfigError):
        sq.build_preamble_set("Gold", 139, 11)


@pytest.mark.parametrize("family,expected", [("ZC", 9522), ("mZC", 1_333_080), ("aZC", 1_333_080), ("mALL", 185_307_711)])
def test_capacity_table(family, expected):
    assert sq.preamble_capacity(family, 139, 2) == expected


def test_capacity_zc_ncs_23():
    assert sq.preamble_capacity("ZC", 139, 23) == 828


def _enumerated_capacity(family, l_ra, n_cs):
    windows = range(l_ra // n_cs)
    if family == "ZC":
        tuples = itertools.product(range(1, l_ra), windows)
    elif family in ("mZC", "aZC"):
        # l_ra covers plus the uncovered ZC set
        covers = [None] + list(range(l_ra))
        tuples = itertools.product(covers, range(1, l_ra), windows)
    else:
        tuples = itertools.product(range(l_ra), range(l_ra), range(l_ra), windows)
    return len(set(tuples))


@pytest.mark.parametrize("family", sq.FAMILIES)
@pytest.mark.parametrize("l_ra,n_cs", [(7, 2), (11, 3), (13, 13)])
def test_capacity_matches_enumeration(family, l_ra, n_cs):
    assert sq.preamble_capacity(family, l_ra, n_cs) == _enumerated_capacity(family, l_ra, n_cs)


def test_capacity_tiny_zc():
    assert sq.preamble_capacity("ZC", 7, 2) == 18


def test_capacity_errors():
    with pytest.raises(ConfigError):
        sq.preamble_capacity("Kasami", 139, 2)
    with pytest.raises(ValueError):
        sq.preamble_capacity("ZC", 139, 140)


def test_sequence_csv_roundtrip(tmp_path):
    x = sq.generate_mall(1, 2, 1, 0)
    path = tmp_path / "x.csv"
    sq.write_sequence_csv(path, x)
    assert path.read_text().splitlines()[0] == "index,real,imag"
    np.testing.assert_array_equal(sq.read_sequence_csv(path), x)


def test_sequence_binary_layout(tmp_path):
    x = np.array([1 + 2j, -0.5 + 0.25j])
    data = sq.sequence_to_bytes(x)
    assert data[:4] == b"\x02\x00\x00\x00"
    assert len(data) == 4 + 2 * 16
    assert np.frombuffer(data[4:], "<f8").tolist() == [1.0, 2.0, -0.5, 0.25]
    path = tmp_path / "x.bin"
    sq.write_sequence_binary(path, sq.generate_zc(4))
    np.testing.assert_array_equal(sq.read_sequence_binary(path), sq.generate_zc(4))


def test_binary_rejects_truncated_record():
    with pytest.raises(ValueError):
        sq.sequence_from_bytes(sq.sequence_to_bytes(np.ones(3))[:-8])
