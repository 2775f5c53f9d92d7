import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdgesture import hv
from hdgesture.errors import ContractViolation
from hdgesture.memories import (AssociativeMemory, CimParams, am_add, am_query, build_cim,
                                build_context_memory, build_item_memory, cim_lookup)

D = 10_000


def off_diagonal(m):
    return m[~np.eye(m.shape[0], dtype=bool)]


# --- item memory ------------------------------------------------------------

def test_item_memory_is_quasi_orthogonal_and_reproducible():
    im = build_item_memory(64, D, seed=3)
    assert len(im) == 64
    d = off_diagonal(im.pairwise_distances())
    assert np.all(np.abs(d - 0.5) <= 0.02)
    assert np.array_equal(build_item_memory(64, D, seed=3).words, im.words)


def test_item_memory_single_entry():
    im = build_item_memory(1, D, seed=0)
    assert len(im) == 1 and im[0].dim == D


def test_item_memory_needs_an_entry():
    with pytest.raises(ContractViolation):
        build_item_memory(0, D)


# --- continuous item memory -------------------------------------------------

def test_cim_two_levels_full_distance_are_complements():
    cim = build_cim(CimParams(2, 1.0), D, seed=1)
    assert hv.hamming(cim[0], cim[1]) == 1.0


def test_cim_eleven_levels_half_distance():
    cim = build_cim(CimParams(11, 0.5), D, seed=2)
    assert hv.hamming(cim[0], cim[10]) == 0.5
    assert abs(hv.hamming(cim[0], cim[5]) - 0.25) <= 0.005


@pytest.mark.parametrize("L,dmax", [(59, 1.0), (55, 0.5), (14, 0.6)])
def test_cim_default_values_endpoint_distance(L, dmax):
    cim = build_cim(CimParams(L, dmax), D, seed=L)
    assert hv.hamming(cim[0], cim[L - 1]) == round(dmax * D) / D


def test_cim_batches_differ_by_at_most_one_and_earlier_take_extra():
    cim = build_cim(CimParams(7, 0.1003), D, seed=4)    # 1003 flips over 6 batches
    steps = [round(hv.hamming(cim[i], cim[i + 1]) * D) for i in range(6)]
    assert sum(steps) == 1003
    assert steps == sorted(steps, reverse=True)
    assert max(steps) - min(steps) <= 1


@given(st.integers(2, 64), st.floats(0, 1), st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_cim_chain_is_monotone_and_linear(L, dmax, seed):
    dim = 2000
    cim = build_cim(CimParams(L, dmax), dim, seed)
    dist = cim.pairwise_distances()
    i, j = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    ideal = dmax * np.abs(i - j) / (L - 1)
    assert np.abs(dist - ideal).max() <= (L - 1) / dim + 0.001
    for a in range(L):
        assert np.all(np.diff(dist[a, a:]) >= 0)


def test_cim_lookup_bounds():
    cim = build_cim(CimParams(5, 0.5), 256, seed=0)
    assert cim_lookup(cim, 0) == cim[0]
    assert cim_lookup(cim, 4) == cim[4]
    with pytest.raises(ContractViolation):
        cim_lookup(cim, 5)
    with pytest.raises(ContractViolation):
        cim_lookup(cim, -1)


def test_cim_adjacent_levels():
    cim = build_cim(CimParams(21, 0.8), D, seed=5)
    for k in range(20):
        assert abs(hv.hamming(cim[k], cim[k + 1]) - 0.8 / 20) <= 1 / D


@pytest.mark.parametrize("L,dmax", [(1, 0.5), (3, 1.5), (3, -0.1)])
def test_cim_params_validated(L, dmax):
    with pytest.raises(ContractViolation):
        CimParams(L, dmax)


# --- associative memory -----------------------------------------------------------

def test_single_add_gives_that_prototype():
    a = hv.random_hv(hv.make_rng(1), 512)
    am = AssociativeMemory(["g"], 512)
    am_add(am, "g", a)
    am.finalize()
    assert am.prototype("g") == a


def test_majority_prototype():
    rng = hv.make_rng(2)
    a, b = hv.random_hv(rng, 512), hv.random_hv(rng, 512)
    am = AssociativeMemory([0], 512)
    for x in (a, a, b):
        am_add(am, 0, x)
    am.finalize()
    assert am.prototype(0) == a


def test_noise_averaging():
    rng = hv.make_rng(3)
    clean = hv.random_hv(rng, D)
    am = AssociativeMemory([0], D)
    for _ in range(100):
        flips = rng.random(D) < 0.1
        am_add(am, 0, hv.Hypervector.from_bipolar(np.where(flips, -1, 1) * clean.to_bipolar()))
    am.finalize()
    assert hv.hamming(am.prototype(0), clean) <= 0.05


def test_query_own_prototype_and_tiebreak_to_lowest_index():
    rng = hv.make_rng(4)
    hvs = [hv.random_hv(rng, 1024) for _ in range(5)]
    am = AssociativeMemory(list("abcde"), 1024)
    for c, x in zip("abcde", hvs):
        am_add(am, c, x)
    am.finalize()
    label, d = am_query(am, hvs[3])
    assert label == "d" and d[3] == 0

    twin = AssociativeMemory(["x", "y"], 64)
    twin.add("x", hv.identity(64))
    twin.add("y", hv.identity(64))
    twin.finalize()
    assert twin.query(hv.negate(hv.identity(64)))[0] == "x"


def test_random_query_against_random_prototypes():
    rng = hv.make_rng(5)
    am = AssociativeMemory(list(range(13)), D)
    for g in range(13):
        am.add(g, hv.random_hv(rng, D))
    am.finalize()
    _, d = am.query(hv.random_hv(rng, D))
    assert np.all(np.abs(d - 0.5) <= 0.02)


def test_noisy_prototype_is_recovered():
    rng = hv.make_rng(6)
    protos = [hv.random_hv(rng, D) for _ in range(13)]
    am = AssociativeMemory(list(range(13)), D)
    for g, p in enumerate(protos):
        am.add(g, p)
    am.finalize()
    flips = rng.random(D) < 0.2
    noisy = hv.Hypervector.from_bipolar(np.where(flips, -1, 1) * protos[7].to_bipolar())
    assert am.query(noisy)[0] == 7


def test_prototype_equals_bipolarized_accumulator():
    rng = hv.make_rng(7)
    am = AssociativeMemory([0, 1], 256, tiebreak_seed=42)
    for _ in range(4):
        am.add(0, hv.random_hv(rng, 256))
        am.add(1, hv.random_hv(rng, 256))
    am.finalize()
    for i in range(2):
        expected = hv.bipolarize(am.accumulator(i), hv.make_rng(42, i))
        assert am.prototype(i) == expected


def test_finalize_does_not_depend_on_update_order():
    rng = hv.make_rng(8)
    xs = [(g, hv.random_hv(rng, 256)) for g in (0, 1, 0, 1, 0, 1)]
    a = AssociativeMemory([0, 1], 256, 9)
    b = AssociativeMemory([0, 1], 256, 9)
    for g, x in xs:
        a.add(g, x)
    for g, x in reversed(xs):
        b.add(g, x)
    assert np.array_equal(a.finalize().prototypes, b.finalize().prototypes)


def test_am_errors():
    am = AssociativeMemory([0], 64)
    with pytest.raises(ContractViolation):
        am.add(1, hv.identity(64))
    with pytest.raises(ContractViolation):
        am.query(hv.identity(64))          # not finalized
    with pytest.raises(ContractViolation):
        AssociativeMemory([], 64).finalize().query(hv.identity(64))
    with pytest.raises(ContractViolation):
        AssociativeMemory([0, 0], 64)


# --- context memory ---------------------------------------------------------

def test_context_memory_orthogonal():
    cm = build_context_memory(8, D, seed=1)
    d = off_diagonal(cm.pairwise_distances())
    assert d.size == 56 and np.all(np.abs(d - 0.5) <= 0.02)
    assert np.array_equal(build_context_memory(8, D, seed=1).words, cm.words)
    assert len(build_context_memory(1, D, seed=1)) == 1


def test_context_memory_lookup_by_label():
    cm = build_context_memory(["arm-up", "arm-down"], 128, seed=2)
    assert cm.for_position("arm-down") == cm[1]
    with pytest.raises(ContractViolation):
        cm.for_position("sideways")


def test_memories_rebuild_from_seed():
    a = build_cim(CimParams(14, 0.6), D, seed=77)
    b = build_cim(CimParams(14, 0.6), D, seed=77)
    assert np.array_equal(a.words, b.words)
