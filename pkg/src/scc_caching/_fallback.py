"""Pure numpy implementations of the hot loops.

Used when the compiled ``_kernels`` extension is unavailable. The random
stream is splitmix64 in counter mode: draw ``i`` of a stream with key ``k``
is ``mix64(k + (i + 1) * GAMMA)`` (mod 2**64), so any slice of the stream can
be computed independently.
"""
import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_CHUNK = 1 << 20
_LOW_BITS = 20


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def random_words(key, start, count):
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(np.uint64(key) + idx * GAMMA)


def erasure_counts(key, bounds, p_success):
    bounds = np.asarray(bounds, dtype=np.int64)
    out = np.zeros(len(bounds) - 1, dtype=np.int64)
    lo, hi = int(bounds[0]), int(bounds[-1])
    if hi <= lo:
        return out
    # running count of successes at every segment boundary
    cum_at = np.zeros(len(bounds), dtype=np.int64)
    running = 0
    pos = lo
    b = 1
    while pos < hi:
        stop = min(pos + _CHUNK, hi)
        u = (random_words(key, pos, stop - pos) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        csum = np.cumsum(u < p_success, dtype=np.int64)
        while b < len(bounds) and bounds[b] <= stop:
            cut = int(bounds[b]) - pos
            cum_at[b] = running + (csum[cut - 1] if cut > 0 else 0)
            b += 1
        running += int(csum[-1])
        pos = stop
    return np.diff(cum_at)


def best_subset_sums(weights, num_weak):
    weights = np.asarray(weights, dtype=np.float64)
    K = len(weights)
    nlow = min(K, _LOW_BITS)
    # sums accumulated in ascending bit order, same as the compiled loop
    sums = np.zeros(1)
    cnt = np.zeros(1, dtype=np.int64)
    for k in range(nlow):
        sums = np.concatenate([sums, sums + weights[k]])
        cnt = np.concatenate([cnt, cnt + (k < num_weak)])
    out = np.full(num_weak + 1, -np.inf)
    for high in range(1 << (K - nlow)):
        s = sums
        c = cnt
        for k in range(nlow, K):
            if (high >> (k - nlow)) & 1:
                s = s + weights[k]
                c = c + (k < num_weak)
        if high == 0:
            s, c = s[1:], c[1:]
        for w in range(num_weak + 1):
            sel = s[c == w]
            if sel.size:
                out[w] = max(out[w], sel.max())
    return out
