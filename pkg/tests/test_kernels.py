import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scc_caching import kernels
from scc_caching import _fallback


def test_splitmix_reference_value():
    # first output of the reference splitmix64 seeded with 0
    assert int(kernels.random_words(0, 0, 1)[0]) == 0xE220A8397B1DCDAF
    assert kernels.mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF


def test_counter_mode_is_seekable():
    whole = kernels.random_words(123, 0, 50)
    assert np.array_equal(kernels.random_words(123, 20, 30), whole[20:])


def test_derive_key_separates_streams():
    keys = {kernels.derive_key(0, 1, t) for t in range(100)}
    assert len(keys) == 100
    assert kernels.derive_key(0, 1, 2) != kernels.derive_key(0, 2, 1)


def test_random_bits_are_balanced():
    bits = kernels.random_bits(7, 100_000)
    assert bits.dtype == np.uint8 and set(np.unique(bits)) == {0, 1}
    assert abs(bits.mean() - 0.5) < 0.01


def test_erasure_counts_bounds():
    bounds = np.array([0, 10, 10, 1000], dtype=np.int64)
    c = kernels.erasure_counts(5, bounds, 0.3)
    assert c[1] == 0 and 0 <= c[0] <= 10 and 0 <= c[2] <= 990
    assert np.array_equal(kernels.erasure_counts(5, bounds, 1.0), np.diff(bounds))
    assert not kernels.erasure_counts(5, bounds, 0.0).any()


needs_compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled extension not built")


@needs_compiled
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 1000), st.integers(0, 300))
def test_backends_agree_on_words(key, start, count):
    from scc_caching import _kernels
    assert np.array_equal(_kernels.random_words(key, start, count), _fallback.random_words(key, start, count))


@needs_compiled
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1), st.lists(st.integers(0, 400), min_size=1, max_size=8), st.floats(0, 1))
def test_backends_agree_on_counts(key, lengths, p):
    from scc_caching import _kernels
    bounds = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    assert np.array_equal(_kernels.erasure_counts(key, bounds, p), _fallback.erasure_counts(key, bounds, p))


@needs_compiled
@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1, 50), min_size=1, max_size=14), st.data())
def test_backends_agree_on_subset_sums(weights, data):
    from scc_caching import _kernels
    kw = data.draw(st.integers(0, len(weights)))
    a = _kernels.best_subset_sums(np.array(weights), kw)
    b = _fallback.best_subset_sums(np.array(weights), kw)
    assert np.array_equal(a, b)


def test_subset_sums_brute_force():
    rng = np.random.default_rng(1)
    w = rng.uniform(1, 10, 9)
    best = kernels.best_subset_sums(w, 4)
    ref = np.full(5, -np.inf)
    for mask in range(1, 1 << 9):
        s = sum(w[b] for b in range(9) if mask >> b & 1)
        weak = sum(1 for b in range(4) if mask >> b & 1)
        ref[weak] = max(ref[weak], s)
    assert np.allclose(best, ref, rtol=1e-12)


def test_use_backend_switches():
    before = kernels.BACKEND
    try:
        kernels.use_backend("python")
        assert kernels.BACKEND == "python"
        a = kernels.random_words(9, 0, 10)
        if kernels.compiled_available():
            kernels.use_backend("cython")
            assert np.array_equal(kernels.random_words(9, 0, 10), a)
        with pytest.raises(ValueError):
            kernels.use_backend("fortran")
    finally:
        kernels.use_backend(before)
