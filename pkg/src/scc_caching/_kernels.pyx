# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the inner loops in :mod:`scc_caching._fallback`.

Both modules must return identical values for identical inputs.
"""
import numpy as np

from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def random_words(uint64_t key, int64_t start, int64_t count):
    cdef uint64_t[::1] out_v
    out = np.empty(count, dtype=np.uint64)
    out_v = out
    cdef int64_t i
    with nogil:
        for i in range(count):
            out_v[i] = mix64(key + <uint64_t>(start + i + 1) * GAMMA)
    return out


def erasure_counts(uint64_t key, const int64_t[::1] bounds, double p_success):
    cdef Py_ssize_t nseg = bounds.shape[0] - 1
    out = np.zeros(nseg, dtype=np.int64)
    cdef int64_t[::1] out_v = out
    cdef Py_ssize_t s
    cdef int64_t i, c
    cdef double u
    with nogil:
        for s in range(nseg):
            c = 0
            for i in range(bounds[s], bounds[s + 1]):
                u = <double>(mix64(key + <uint64_t>(i + 1) * GAMMA) >> 11) * 1.1102230246251565e-16
                if u < p_success:
                    c += 1
            out_v[s] = c
    return out


def best_subset_sums(const double[::1] weights, int num_weak):
    cdef int K = weights.shape[0]
    cdef int nlow = K if K < 20 else 20
    cdef Py_ssize_t nl = (<Py_ssize_t>1) << nlow
    out = np.full(num_weak + 1, -np.inf)
    cdef double[::1] out_v = out
    # low-bit table: sums added in ascending bit order
    low = np.zeros(nl)
    lowc = np.zeros(nl, dtype=np.int64)
    cdef double[::1] low_v = low
    cdef int64_t[::1] lowc_v = lowc
    cdef Py_ssize_t m, hb
    cdef int k, w
    cdef double s
    cdef uint64_t high, nhigh = (<uint64_t>1) << (K - nlow)
    with nogil:
        for m in range(1, nl):
            hb = 0
            while (m >> (hb + 1)) != 0:
                hb += 1
            low_v[m] = low_v[m ^ ((<Py_ssize_t>1) << hb)] + weights[hb]
            lowc_v[m] = lowc_v[m ^ ((<Py_ssize_t>1) << hb)] + (1 if hb < num_weak else 0)
        for high in range(nhigh):
            for m in range(1 if high == 0 else 0, nl):
                s = low_v[m]
                w = <int>lowc_v[m]
                for k in range(nlow, K):
                    if (high >> (k - nlow)) & 1:
                        s = s + weights[k]
                        if k < num_weak:
                            w += 1
                if s > out_v[w]:
                    out_v[w] = s
    return out
