"""Closed-form memory-rate analysis of the successive cache-channel coding scheme.

Everything here is a pure function of a validated :class:`SystemConfig`.
Rates are in bits per channel use per file, memories in the same unit
(normalized by the blocklength ``n``).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from scc_caching import kernels
from scc_caching.combinatorics import binom, subsets
from scc_caching.model import (
    ATOL,
    HomogeneousConfig,
    InvalidIndex,
    MemoryRatePair,
    SchemeIndex,
    SystemConfig,
)

MAX_BOUND_RECEIVERS = 24


class NegativeFactor(ValueError):
    """A proportioning factor is not positive (strong receivers not strictly better)."""


class UnboundedPair(ValueError):
    """The requested pair has infinite rate (no strong receivers, everything cached)."""


class IntractableSize(ValueError):
    pass


def _check(cfg: SystemConfig, idx: SchemeIndex) -> SchemeIndex:
    idx.check(cfg.num_weak)
    if cfg.num_strong == 0 and idx.p != idx.q:
        raise InvalidIndex(f"without strong receivers only p == q is defined, got {idx}")
    return idx


def gamma(cfg: SystemConfig, p: int, i: int) -> float:
    """Proportioning coefficient of subfile level ``i`` for a scheme starting at ``p``.

    Equals C(K_w,i) / (C(K_w,p) K_s^(i-p)) times the product over j = p..i-1 of
    K_s / ((1 - delta_{K_w-j}) * sum_strong 1/(1-delta_l)) - 1.
    """
    K_w, K_s = cfg.num_weak, cfg.num_strong
    if not 0 <= p <= i <= K_w:
        raise InvalidIndex(f"need 0 <= p <= i <= {K_w}, got p={p}, i={i}")
    if i == p:
        return 1.0
    if K_s == 0:
        raise InvalidIndex("gamma beyond i == p needs at least one strong receiver")
    strong = cfg.strong_inverse_sum
    g = binom(K_w, i) / (binom(K_w, p) * K_s ** (i - p))
    for j in range(p, i):
        factor = K_s / ((1.0 - cfg.erasure(K_w - j)) * strong) - 1.0
        if factor <= 0.0:
            raise NegativeFactor(
                f"factor for j={j} is {factor:.3g}; receiver {K_w - j} is not worse than "
                f"the strong receivers on average"
            )
        g *= factor
    return g


def gammas(cfg: SystemConfig, idx: SchemeIndex) -> list[float]:
    _check(cfg, idx)
    return [gamma(cfg, idx.p, i) for i in idx.levels]


def weak_level_cost(cfg: SystemConfig, i: int) -> float:
    """Channel uses (times F) per unit of R^(i) spent multicasting level-i XORs.

    Each (i+1)-subset is served at the rate of its worst member; receiver j is
    the worst member of C(K_w - j, i) such subsets.
    """
    K_w = cfg.num_weak
    total = sum(binom(K_w - j, i) / (1.0 - cfg.erasure(j)) for j in range(1, K_w - i + 1))
    return total / binom(K_w, i)


def achievable_pair(cfg: SystemConfig, idx: SchemeIndex) -> MemoryRatePair:
    """The (M, R) pair reached by the scheme with subfile levels p..q."""
    gs = gammas(cfg, idx)
    levels = list(idx.levels)
    denom = sum(g * weak_level_cost(cfg, i) for g, i in zip(gs, levels)) + cfg.strong_inverse_sum
    if denom <= 0.0:
        raise UnboundedPair(f"{idx}: every receiver caches the whole library")
    total = sum(gs)
    rate = cfg.packet_bits * total / denom
    memory = cfg.num_files * sum(i * g for g, i in zip(gs, levels)) / (cfg.num_weak * total) * rate
    return MemoryRatePair(memory, rate, idx)


def homogeneous_gamma(hcfg: HomogeneousConfig, p: int, i: int) -> float:
    K_w, K_s = hcfg.num_weak, hcfg.num_strong
    if K_s < 1:
        raise InvalidIndex("homogeneous formulas need at least one strong receiver")
    ratio = (1.0 - hcfg.delta_strong) / (1.0 - hcfg.delta_weak) - 1.0
    return binom(K_w, i) / (binom(K_w, p) * K_s ** (i - p)) * ratio ** (i - p)


def homogeneous_pair(hcfg: HomogeneousConfig, idx: SchemeIndex) -> MemoryRatePair:
    """Same pair as :func:`achievable_pair`, via the homogeneous simplification."""
    K_w, K_s = hcfg.num_weak, hcfg.num_strong
    idx.check(K_w)
    if K_s < 1:
        raise InvalidIndex("homogeneous formulas need at least one strong receiver")
    levels = list(idx.levels)
    gs = [homogeneous_gamma(hcfg, idx.p, i) for i in levels]
    weak = sum((K_w - i) / (i + 1) * g for g, i in zip(gs, levels)) / (1.0 - hcfg.delta_weak)
    rate = hcfg.packet_bits * sum(gs) / (weak + K_s / (1.0 - hcfg.delta_strong))
    memory = hcfg.num_files * sum(i * g for g, i in zip(gs, levels)) / (K_w * sum(gs)) * rate
    return MemoryRatePair(memory, rate, idx)


@dataclass(frozen=True)
class RateSplit:
    total_rate: float
    levels: tuple[int, ...]
    subfile_rates: tuple[float, ...]

    def __getitem__(self, i: int) -> float:
        """Rate of subfile level ``i``."""
        return self.subfile_rates[self.levels.index(i)]


def rate_split(cfg: SystemConfig, idx: SchemeIndex, R: float) -> RateSplit:
    if R < 0:
        raise ValueError(f"rate must be non-negative, got {R}")
    gs = gammas(cfg, idx)
    total = sum(gs)
    parts = [g / total * R for g in gs[:-1]]
    parts.append(R - sum(parts))
    return RateSplit(R, tuple(idx.levels), tuple(parts))


@dataclass(frozen=True)
class SubAllocation:
    """Time fractions for one sub-message; one entry per orthogonal period."""

    subset: tuple[int, ...]
    periods: tuple[float, ...]
    weak_terms: tuple[float, ...] = ()
    strong_terms: tuple[float, ...] = ()

    @property
    def total(self) -> float:
        return sum(self.periods)


@dataclass(frozen=True)
class MessageAllocation:
    t: int
    level: int
    kind: str  # "multicast" | "joint" | "unicast"
    subs: tuple[SubAllocation, ...]

    @property
    def total(self) -> float:
        return sum(s.total for s in self.subs)


@dataclass(frozen=True)
class TimeAllocation:
    idx: SchemeIndex
    rate: float
    messages: tuple[MessageAllocation, ...]

    @property
    def total(self) -> float:
        return sum(m.total for m in self.messages)

    def periods(self) -> list[float]:
        """All period fractions flattened in transmission order."""
        return [b for m in self.messages for s in m.subs for b in s.periods]


def time_allocation(cfg: SystemConfig, idx: SchemeIndex, R: float) -> TimeAllocation:
    """Fractions of the blocklength each period needs to deliver rate ``R``.

    Every constraint is met with equality. A total above 1 means ``R`` is not
    deliverable with this index.
    """
    split = rate_split(cfg, idx, R)
    K_w, K_s, F = cfg.num_weak, cfg.num_strong, cfg.packet_bits
    p, q = idx.p, idx.q

    def worst(S):
        # erasures are sorted, so the smallest label is the worst channel
        return 1.0 - cfg.erasure(min(S))

    messages = []
    if q < K_w:
        piece = split[q] / binom(K_w, q)
        subs = tuple(
            SubAllocation(S, (piece / (worst(S) * F),)) for S in subsets(K_w, q + 1)
        )
        messages.append(MessageAllocation(1, q, "multicast", subs))
    for i in range(q - 1, p - 1, -1):
        weak_piece = split[i] / (K_s * binom(K_w, i))
        strong_piece = split[i + 1] / binom(K_w, i + 1)
        subs = []
        for S in subsets(K_w, i + 1):
            a = weak_piece / (worst(S) * F)
            bs = tuple(
                (weak_piece + strong_piece) / ((1.0 - cfg.erasure(K_w + m)) * F)
                for m in range(1, K_s + 1)
            )
            subs.append(SubAllocation(S, tuple(max(a, b) for b in bs), (a,) * K_s, bs))
        messages.append(MessageAllocation(q - i + 1, i, "joint", tuple(subs)))
    if K_s:
        last = tuple(split[p] / ((1.0 - cfg.erasure(K_w + m)) * F) for m in range(1, K_s + 1))
        messages.append(MessageAllocation(q - p + 2, p, "unicast", (SubAllocation((), last),)))
    return TimeAllocation(idx, R, tuple(messages))


def scheme_indices(cfg: SystemConfig) -> list[SchemeIndex]:
    K_w = cfg.num_weak
    if cfg.num_strong == 0:
        return [SchemeIndex(p, p) for p in range(K_w + 1)]
    return [SchemeIndex(p, q) for p in range(K_w + 1) for q in range(p, K_w + 1)]


def all_pairs(cfg: SystemConfig) -> list[MemoryRatePair]:
    """Every finite achievable pair; degenerate indices are skipped."""
    out = []
    for idx in scheme_indices(cfg):
        try:
            out.append(achievable_pair(cfg, idx))
        except (UnboundedPair, NegativeFactor):
            continue
    return out


def stw_indices(cfg: SystemConfig) -> list[SchemeIndex]:
    K_w = cfg.num_weak
    idxs = [SchemeIndex(p, p + 1) for p in range(K_w)]
    return idxs + [SchemeIndex(0, 0), SchemeIndex(K_w, K_w)]


def stw_pairs(cfg: SystemConfig) -> list[MemoryRatePair]:
    """Baseline pairs: consecutive-level schemes plus the two corner points.

    Only defined for homogeneous configurations.
    """
    if not cfg.is_homogeneous():
        raise ValueError("the STW baseline is only defined for homogeneous configurations")
    return [achievable_pair(cfg, idx) for idx in stw_indices(cfg)]


@dataclass(frozen=True)
class TradeoffCurve:
    points: tuple[MemoryRatePair, ...]
    vertices: tuple[tuple[float, float], ...]
    tail_slope: float = 0.0

    def envelope(self, M):
        """Best rate reachable by memory-sharing with cache size ``M``."""
        xs = np.array([v[0] for v in self.vertices])
        ys = np.array([v[1] for v in self.vertices])
        Ms = np.asarray(M, dtype=float)
        out = np.interp(Ms, xs, ys, left=np.nan)
        beyond = Ms > xs[-1]
        out = np.where(beyond, ys[-1] + self.tail_slope * (Ms - xs[-1]), out)
        return float(out) if out.ndim == 0 else out

    def best_index(self, M: float) -> SchemeIndex:
        """Index of the highest-rate single scheme fitting in cache size ``M``."""
        fits = [pt for pt in self.points if pt.memory <= M + ATOL]
        best = max(fits, key=lambda pt: (pt.rate, -pt.index.p, -pt.index.q))
        return best.index

    @property
    def max_memory(self) -> float:
        return max(pt.memory for pt in self.points)


def upper_concave_hull(xy, tail_slope: float = 0.0) -> list[tuple[float, float]]:
    """Vertices of the upper concave envelope, cut where slopes drop to ``tail_slope``."""
    best: dict[float, float] = {}
    for x, y in xy:
        best[x] = max(y, best.get(x, -np.inf))
    pts = sorted(best.items())
    hull: list[tuple[float, float]] = []
    for x, y in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # pop the middle point unless it lies strictly above the chord
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append((x, y))
    for k in range(len(hull) - 1):
        (x1, y1), (x2, y2) = hull[k], hull[k + 1]
        if (y2 - y1) <= tail_slope * (x2 - x1):
            return hull[: k + 1]
    return hull


def curve_from_pairs(cfg: SystemConfig, pairs) -> TradeoffCurve:
    # with no strong receivers, caching whole files adds rate 1/N per unit memory
    tail = 1.0 / cfg.num_files if cfg.num_strong == 0 else 0.0
    pairs = tuple(pairs)
    vertices = upper_concave_hull([(pt.memory, pt.rate) for pt in pairs], tail)
    return TradeoffCurve(pairs, tuple(vertices), tail)


def tradeoff_curve(cfg: SystemConfig) -> TradeoffCurve:
    return curve_from_pairs(cfg, all_pairs(cfg))


def stw_curve(cfg: SystemConfig) -> TradeoffCurve:
    return curve_from_pairs(cfg, stw_pairs(cfg))


@lru_cache(maxsize=64)
def _bound_table(cfg: SystemConfig) -> np.ndarray:
    if cfg.num_receivers > MAX_BOUND_RECEIVERS:
        raise IntractableSize(
            f"exhaustive bound over 2^{cfg.num_receivers} subsets refused "
            f"(limit K <= {MAX_BOUND_RECEIVERS})"
        )
    weights = [1.0 / (1.0 - d) for d in cfg.erasures]
    return kernels.best_subset_sums(weights, cfg.num_weak)


def upper_bound_curve(cfg: SystemConfig, Ms) -> np.ndarray:
    """Converse bound on the capacity at each cache size in ``Ms``.

    Minimum over non-empty receiver subsets S of F / sum_{k in S} 1/(1-delta_k)
    plus (M/N) |S ∩ weak|. All subsets are scanned; for a fixed number of weak
    members only the largest inverse-erasure sum matters.
    """
    table = _bound_table(cfg)
    Ms = np.asarray(Ms, dtype=float)
    if np.any(Ms < 0):
        raise ValueError("cache size must be non-negative")
    best = np.full(Ms.shape, np.inf)
    for w, s in enumerate(table):
        if np.isfinite(s):
            best = np.minimum(best, cfg.packet_bits / s + Ms / cfg.num_files * w)
    return best


def upper_bound(cfg: SystemConfig, M: float) -> float:
    return float(upper_bound_curve(cfg, np.array([M]))[0])
