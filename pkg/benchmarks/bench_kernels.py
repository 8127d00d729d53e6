"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from scc_caching import _fallback, kernels


def cases():
    rng = np.random.default_rng(0)
    bounds = np.concatenate([[0], np.cumsum(rng.integers(500, 5000, 400))]).astype(np.int64)
    w22 = rng.uniform(1, 10, 22)
    w24 = rng.uniform(1, 10, 24)
    return {
        "random_words 2^22": lambda m: m.random_words(12345, 0, 1 << 22),
        f"erasure_counts {bounds[-1]} packets": lambda m: m.erasure_counts(99, bounds, 0.3),
        "best_subset_sums K=22": lambda m: m.best_subset_sums(w22, 7),
        "best_subset_sums K=24": lambda m: m.best_subset_sums(w24, 7),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.compiled_available():
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    from scc_caching import _kernels

    print(f"{'kernel':34s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        a, b = fn(_kernels), fn(_fallback)
        assert np.array_equal(a, b), name
        tc = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        print(f"{name:34s} {tc:10.4f} {tp:10.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
