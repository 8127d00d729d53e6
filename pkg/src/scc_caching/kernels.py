"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``SCC_CACHING_PURE_PYTHON=1`` forces the numpy fallback. Both
backends produce identical results.
"""
from __future__ import annotations

import os

import numpy as np

from scc_caching import _fallback

GENERATOR_ID = "splitmix64-counter"
_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _load():
    if os.environ.get("SCC_CACHING_PURE_PYTHON", "") not in ("", "0"):
        return _fallback, "python"
    try:
        from scc_caching import _kernels
    except ImportError:
        return _fallback, "python"
    return _kernels, "cython"


_impl, BACKEND = _load()


def use_backend(name: str) -> None:
    """Switch backend at runtime (``"cython"`` or ``"python"``); for tests and benchmarks."""
    global _impl, BACKEND
    if name == "python":
        _impl, BACKEND = _fallback, "python"
    elif name == "cython":
        from scc_caching import _kernels

        _impl, BACKEND = _kernels, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")


def compiled_available() -> bool:
    try:
        from scc_caching import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, *stream: int) -> int:
    """Stream key for ``seed`` and a tuple of non-negative stream identifiers."""
    h = mix64(seed + _GAMMA)
    for x in stream:
        h = mix64((h ^ (x & _MASK)) + _GAMMA)
    return h


def random_words(key: int, start: int, count: int) -> np.ndarray:
    return _impl.random_words(key & _MASK, int(start), int(count))


def random_bits(key: int, nbits: int) -> np.ndarray:
    """``nbits`` pseudo-random bits (uint8 0/1), little-endian within each word."""
    words = random_words(key, 0, -(-nbits // 64))
    raw = words.astype("<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:nbits]


def erasure_counts(key: int, bounds, p_success: float) -> np.ndarray:
    """Count non-erased packets per segment ``[bounds[s], bounds[s+1])``.

    Packet ``i`` survives when its uniform draw is below ``p_success``.
    """
    return _impl.erasure_counts(key & _MASK, np.ascontiguousarray(bounds, dtype=np.int64), float(p_success))


def best_subset_sums(weights, num_weak: int) -> np.ndarray:
    """Largest weight sum over non-empty subsets, grouped by weak-member count.

    Entry ``w`` is the maximum of ``sum(weights[S])`` over every non-empty
    subset ``S`` containing exactly ``w`` of the first ``num_weak`` indices,
    or ``-inf`` if there is no such subset.
    """
    return _impl.best_subset_sums(np.ascontiguousarray(weights, dtype=np.float64), int(num_weak))
