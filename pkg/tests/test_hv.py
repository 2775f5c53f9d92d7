from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdgesture import hv
from hdgesture.errors import ContractViolation
from hdgesture.hv import Hypervector


def bipolar_arrays(max_dim=300):
    return st.integers(1, max_dim).flatmap(
        lambda d: st.lists(st.sampled_from([-1, 1]), min_size=d, max_size=d)
    ).map(lambda xs: np.array(xs, dtype=np.int8))


def hv_pairs(n=2, max_dim=300):
    def build(d):
        vec = st.lists(st.sampled_from([-1, 1]), min_size=d, max_size=d)
        return st.tuples(*[vec] * n).map(
            lambda vs: [Hypervector.from_bipolar(np.array(v, dtype=np.int8)) for v in vs])
    return st.integers(1, max_dim).flatmap(build)


# --- packing ---------------------------------------------------------------

def test_bit_layout_is_little_endian_words():
    x = -np.ones(130, dtype=np.int8)
    x[0] = x[65] = x[129] = 1
    words = hv.pack_rows(x)
    assert words.dtype == np.dtype("<u8")
    assert words.tolist() == [1, 2, 2]


@given(bipolar_arrays())
def test_pack_roundtrip(x):
    h = Hypervector.from_bipolar(x)
    assert np.array_equal(h.to_bipolar(), x)
    assert h.words.shape == (hv.n_words(x.size),)


@given(bipolar_arrays())
def test_padding_bits_stay_zero(x):
    h = hv.negate(Hypervector.from_bipolar(x))
    rem = x.size % 64
    if rem:
        assert int(h.words[-1]) >> rem == 0


def test_wrong_word_count_rejected():
    with pytest.raises(ContractViolation):
        Hypervector(np.zeros(3, dtype=np.uint64), 64)


# --- random sources ----------------------------------------------------------

def test_same_seed_same_hv():
    a = hv.random_hv(hv.make_rng(5))
    b = hv.random_hv(hv.make_rng(5))
    assert a == b and hv.hamming(a, b) == 0


def test_independent_seeds_are_quasi_orthogonal():
    a = hv.random_hv(hv.make_rng(1))
    b = hv.random_hv(hv.make_rng(2))
    assert abs(hv.hamming(a, b) - 0.5) <= 0.02


def test_per_position_mean_sign_is_balanced():
    rng = hv.make_rng(3)
    draws = hv.random_bipolar(rng, (1000, 10_000))
    assert np.abs(draws.mean(axis=0)).max() <= 0.2   # 6.3 sigma
    assert np.mean(np.abs(draws.mean(axis=0)) <= 0.1) > 0.99


def test_derived_generators_independent_of_creation_order():
    a1 = hv.make_rng(9, "x", 1).integers(0, 1 << 30, 5)
    hv.make_rng(9, "y")
    a2 = hv.make_rng(9, "x", 1).integers(0, 1 << 30, 5)
    b = hv.make_rng(9, "x", 2).integers(0, 1 << 30, 5)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)


def test_child_seed_is_64_bit_and_stable():
    s = hv.child_seed(0, "am", 3)
    assert 0 <= s < 2**64
    assert s == hv.child_seed(0, "am", 3)
    assert s != hv.child_seed(0, "am", 4)


def test_negative_seed_rejected():
    with pytest.raises(ContractViolation):
        hv.make_rng(-1)


# --- bind / permute ----------------------------------------------------------

@given(hv_pairs(1))
def test_bind_self_is_identity(hs):
    (a,) = hs
    assert hv.bind(a, a) == hv.identity(a.dim)


@given(hv_pairs(2))
def test_bind_self_inverse(hs):
    a, b = hs
    assert hv.bind(hv.bind(a, b), b) == a


@given(hv_pairs(2))
def test_bind_matches_elementwise_product(hs):
    a, b = hs
    assert np.array_equal(hv.bind(a, b).to_bipolar(), a.to_bipolar() * b.to_bipolar())


@given(hv_pairs(3))
def test_bind_isometry(hs):
    a, b, c = hs
    assert hv.hamming(hv.bind(a, c), hv.bind(b, c)) == hv.hamming(a, b)


def test_bind_with_random_is_orthogonal():
    a = hv.random_hv(hv.make_rng(1))
    r = hv.random_hv(hv.make_rng(2))
    assert abs(hv.hamming(hv.bind(a, r), a) - 0.5) <= 0.02


def test_bind_dim_mismatch():
    with pytest.raises(ContractViolation):
        hv.bind(hv.identity(10), hv.identity(11))


def test_permute_rotates_toward_higher_indices():
    x = np.array([1, -1, -1, -1, -1], dtype=np.int8)
    out = hv.permute(Hypervector.from_bipolar(x), 2).to_bipolar()
    assert out.tolist() == [-1, -1, 1, -1, -1]


@given(hv_pairs(2), st.integers(-500, 500))
def test_permute_bijection_and_isometry(hs, k):
    a, b = hs
    assert hv.permute(a, 0) == a
    assert hv.permute(hv.permute(a, k), a.dim - k) == a
    assert hv.hamming(hv.permute(a, k), hv.permute(b, k)) == hv.hamming(a, b)


@given(hv_pairs(1))
def test_permute_full_cycle(hs):
    (a,) = hs
    assert hv.permute(hv.permute(a, 1), a.dim - 1) == a


# --- hamming / dot -------------------------------------------------------------

@given(hv_pairs(2))
def test_dot_hamming_identity(hs):
    a, b = hs
    assert hv.dot(a, b) == round(a.dim * (1 - 2 * hv.hamming(a, b)))
    assert hv.dot(a, b) == int(np.dot(a.to_bipolar().astype(int), b.to_bipolar().astype(int)))


@given(hv_pairs(1))
def test_hamming_and_dot_extremes(hs):
    (a,) = hs
    assert hv.hamming(a, a) == 0
    assert hv.hamming(a, hv.negate(a)) == 1
    assert hv.dot(a, a) == a.dim
    assert hv.dot(a, hv.negate(a)) == -a.dim


def test_hamming_counts_matches_pairwise(rng):
    q = hv.pack_rows(hv.random_bipolar(rng, (7, 200)))
    r = hv.pack_rows(hv.random_bipolar(rng, (5, 200)))
    d = hv.hamming_counts(q, r)
    for i in range(7):
        for j in range(5):
            assert d[i, j] == round(hv.hamming(Hypervector(q[i], 200), Hypervector(r[j], 200)) * 200)


# --- bundle / accumulate ----------------------------------------------------------

def test_bundle_single_is_identity_op():
    a = hv.random_hv(hv.make_rng(1))
    assert hv.bundle([a], hv.make_rng(0)) == a


@given(hv_pairs(2))
@settings(max_examples=50)
def test_bundle_strict_majority(hs):
    a, b = hs
    assert hv.bundle([a, a, b], hv.make_rng(0)) == a


def test_bundle_of_five_matches_combinatorial_oracle():
    expected = (comb(4, 3) + comb(4, 4)) / 2**4     # 0.3125
    hvs = [hv.random_hv(hv.make_rng(10, i)) for i in range(5)]
    b = hv.bundle(hvs, hv.make_rng(0))
    for h in hvs:
        assert abs(hv.hamming(b, h) - expected) <= 0.02


def test_bundle_empty_rejected():
    with pytest.raises(ContractViolation):
        hv.bundle([], hv.make_rng(0))


def test_accumulate_single_then_bipolarize():
    a = hv.random_hv(hv.make_rng(1), 1000)
    acc = hv.accumulate(hv.Accumulator.zeros(1000), a)
    assert hv.bipolarize(acc, hv.make_rng(0)) == a


def test_accumulate_cancellation():
    a = hv.random_hv(hv.make_rng(1), 1000)
    acc = hv.accumulate(hv.accumulate(hv.Accumulator.zeros(1000), a), a, -1)
    assert not acc.counts.any()
    assert acc.n_added == 2


def test_accumulate_then_bipolarize_equals_bundle():
    hvs = [hv.random_hv(hv.make_rng(2, i), 1000) for i in range(5)]
    acc = hv.Accumulator.zeros(1000)
    for h in hvs:
        acc = hv.accumulate(acc, h)
    assert hv.bipolarize(acc, hv.make_rng(7)) == hv.bundle(hvs, hv.make_rng(7))


def test_even_bundle_ties_follow_the_supplied_generator():
    hvs = [hv.random_hv(hv.make_rng(3, i), 1000) for i in range(4)]
    assert hv.bundle(hvs, hv.make_rng(1)) == hv.bundle(hvs, hv.make_rng(1))
    assert hv.bundle(hvs, hv.make_rng(1)) != hv.bundle(hvs, hv.make_rng(2))


def test_zero_accumulator_gives_fair_coins():
    out = hv.bipolarize(hv.Accumulator.zeros(10_000), hv.make_rng(4)).to_bipolar()
    assert abs(out.mean()) <= 0.04    # 4 sigma


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=8))
@settings(max_examples=50)
def test_accumulator_counts_bounded_by_n_added(weights):
    rng = hv.make_rng(11)
    acc = hv.Accumulator.zeros(64)
    for w in weights:
        acc = hv.accumulate(acc, hv.random_hv(rng, 64), w)
    assert np.abs(acc.counts).max() <= acc.n_added


def test_non_integer_weight_rejected():
    with pytest.raises(ContractViolation):
        hv.accumulate(hv.Accumulator.zeros(8), hv.identity(8), 0.5)


def test_random_pair_distance_concentration():
    rng = hv.make_rng(99)
    a = hv.pack_rows(hv.random_bipolar(rng, (10_000, 10_000)))
    b = hv.pack_rows(hv.random_bipolar(rng, (10_000, 10_000)))
    d = np.bitwise_count(a ^ b).sum(axis=1) / 10_000
    assert 0.498 <= d.mean() <= 0.502
    assert np.all(np.abs(d - 0.5) <= 0.03)
