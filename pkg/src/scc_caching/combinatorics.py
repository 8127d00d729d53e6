"""Lexicographic enumeration of the i-element subsets of {1..K_w}.

Subsets are sorted tuples; index ``j`` is 1-based, matching the order in
which cache pieces are listed, e.g. for K_w=3, i=2: (1,2), (1,3), (2,3).
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb


class IndexOutOfRange(IndexError):
    pass


class NotASubset(ValueError):
    pass


def binom(n: int, k: int) -> int:
    """Exact binomial coefficient; 0 when k < 0 or k > n."""
    if k < 0 or n < 0 or k > n:
        return 0
    return comb(n, k)


def subset_by_index(K_w: int, i: int, j: int) -> tuple[int, ...]:
    """Return the j-th (1-based) i-element subset of [K_w] in lexicographic order."""
    if not 0 <= i <= K_w:
        raise IndexOutOfRange(f"subset size {i} outside [0, {K_w}]")
    total = binom(K_w, i)
    if not 1 <= j <= total:
        raise IndexOutOfRange(f"index {j} outside [1, {total}]")
    rank = j - 1
    out = []
    x = 1
    for remaining in range(i, 0, -1):
        # skip candidates whose block of completions lies entirely below rank
        while True:
            block = binom(K_w - x, remaining - 1)
            if rank < block:
                break
            rank -= block
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def index_of_subset(K_w: int, S) -> int:
    """Inverse of :func:`subset_by_index`; the subset size is ``len(S)``."""
    items = list(S)
    elems = sorted(set(items))
    if len(elems) != len(items):
        raise NotASubset(f"repeated elements in {S!r}")
    if elems and (elems[0] < 1 or elems[-1] > K_w):
        raise NotASubset(f"{S!r} is not a subset of [1, {K_w}]")
    i = len(elems)
    rank = 0
    prev = 0
    for pos, x in enumerate(elems):
        remaining = i - pos
        for y in range(prev + 1, x):
            rank += binom(K_w - y, remaining - 1)
        prev = x
    return rank + 1


@lru_cache(maxsize=None)
def subsets(K_w: int, i: int) -> tuple[tuple[int, ...], ...]:
    """All i-element subsets of [K_w], position ``j-1`` holding S_j."""
    if not 0 <= i <= K_w:
        return ()
    return tuple(combinations(range(1, K_w + 1), i))
