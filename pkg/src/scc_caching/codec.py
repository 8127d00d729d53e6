"""Bit-exact placement, delivery-plan construction and decoding.

Bits are stored one per byte (``uint8`` arrays of 0/1). Files, levels,
receivers and subset elements are 1-based throughout, matching the labels
``W_{f,S}^(i)`` used in the delivery tables.

Integrality rules (the analysis assumes asymptotically long files):

* subfile ``i`` gets ``floor(file_bits * gamma_i / sum(gamma))`` bits and the
  last subfile takes the remainder;
* each of its ``C(K_w, i)`` pieces is ``ceil(len_i / C(K_w, i))`` bits long,
  the final piece being zero-padded;
* XOR of operands with different real lengths is zero-padded to the longest.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from scc_caching import kernels
from scc_caching.combinatorics import binom, index_of_subset, subsets
from scc_caching.model import DemandVector, SchemeIndex, SystemConfig
from scc_caching.rates import TimeAllocation, gammas, time_allocation

MULTICAST = "weak_multicast"
JOINT = "joint_block"
UNICAST = "strong_unicast"

# stream identifier for library bits, keeps them apart from channel streams
_LIBRARY_STREAM = 0x4C4942


class PieceTooSmall(ValueError):
    pass


class AllocationOverflow(ValueError):
    def __init__(self, message, total_beta=None):
        super().__init__(message)
        self.total_beta = total_beta


@dataclass(frozen=True, order=True)
class PieceLabel:
    file: int
    level: int
    subset: tuple[int, ...]

    def __str__(self):
        s = ",".join(map(str, self.subset))
        return f"W[{self.file},{{{s}}}]^({self.level})"


class Library:
    """N pseudo-random files split into subfiles and equal-length pieces."""

    def __init__(self, cfg: SystemConfig, idx: SchemeIndex, n: int, rate: float, seed: int):
        self.cfg, self.idx, self.n, self.rate, self.seed = cfg, idx, n, rate, seed
        self.file_bits = int(round(n * rate))
        gs = gammas(cfg, idx)
        total = sum(gs)
        levels = list(idx.levels)
        lens = [math.floor(self.file_bits * g / total) for g in gs[:-1]]
        lens.append(self.file_bits - sum(lens))
        self.subfile_bits = dict(zip(levels, lens))
        self.piece_bits = {}
        for i in levels:
            count = binom(cfg.num_weak, i)
            L = -(-self.subfile_bits[i] // count)
            if self.file_bits and (count - 1) * L >= self.subfile_bits[i]:
                raise PieceTooSmall(
                    f"level {i}: {self.subfile_bits[i]} bits cannot fill {count} pieces; "
                    f"increase n or the rate"
                )
            self.piece_bits[i] = L
        N = cfg.num_files
        key = kernels.derive_key(seed, _LIBRARY_STREAM)
        self.files = kernels.random_bits(key, N * self.file_bits).reshape(N, self.file_bits)
        self._pieces = {}
        offset = 0
        for i in levels:
            count, L, length = binom(cfg.num_weak, i), self.piece_bits[i], self.subfile_bits[i]
            padded = np.zeros((N, count * L), dtype=np.uint8)
            padded[:, :length] = self.files[:, offset : offset + length]
            self._pieces[i] = padded.reshape(N, count, L)
            offset += length

    @property
    def levels(self) -> range:
        return self.idx.levels

    def piece(self, label: PieceLabel) -> np.ndarray:
        """Piece bits zero-padded to the level's piece length (read-only view)."""
        j = index_of_subset(self.cfg.num_weak, label.subset)
        view = self._pieces[label.level][label.file - 1, j - 1]
        view.flags.writeable = False
        return view

    def real_bits(self, level: int, j: int) -> int:
        """Number of file bits (not padding) in the j-th piece of ``level``."""
        L = self.piece_bits[level]
        return max(0, min(L, self.subfile_bits[level] - (j - 1) * L))

    def label_bits(self, label: PieceLabel) -> int:
        return self.real_bits(label.level, index_of_subset(self.cfg.num_weak, label.subset))

    def subfile(self, f: int, level: int) -> np.ndarray:
        return self._pieces[level][f - 1].reshape(-1)[: self.subfile_bits[level]]


@dataclass
class CacheContents:
    receiver: int
    pieces: dict[PieceLabel, np.ndarray] = field(default_factory=dict)

    @property
    def bits(self) -> int:
        return sum(len(v) for v in self.pieces.values())

    def __contains__(self, label: PieceLabel) -> bool:
        return label in self.pieces


def place(cfg: SystemConfig, idx: SchemeIndex, library_seed: int, n: int, R: float):
    """Build the library and fill every weak cache with the pieces labelled by it."""
    lib = Library(cfg, idx, n, R, library_seed)
    caches = []
    for k in range(1, cfg.num_weak + 1):
        z = CacheContents(k)
        for i in idx.levels:
            for S in subsets(cfg.num_weak, i):
                if k in S:
                    for f in range(1, cfg.num_files + 1):
                        label = PieceLabel(f, i, S)
                        z.pieces[label] = lib.piece(label)
        caches.append(z)
    return lib, caches


@dataclass
class CodedMessage:
    """One orthogonal transmission period.

    ``operands`` lists ``(receiver, piece)`` pairs whose XOR forms the weak
    payload; ``segment`` is ``(m, K_s)`` when only the m-th of K_s equal parts
    of that XOR is carried. ``strong`` lists the pieces carried for
    ``strong_receiver``.
    """

    kind: str
    t: int
    j: int
    m: int
    level: int
    subset: tuple[int, ...]
    operands: tuple[tuple[int, PieceLabel], ...] = ()
    segment: tuple[int, int] | None = None
    strong_receiver: int | None = None
    strong: tuple[PieceLabel, ...] = ()
    weak_payload: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8), repr=False)
    strong_payload: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8), repr=False)
    packets: int = 0

    @property
    def weak_bits(self) -> int:
        return len(self.weak_payload)

    @property
    def strong_bits(self) -> int:
        return len(self.strong_payload)

    @property
    def payload_bits(self) -> int:
        return self.weak_bits + self.strong_bits

    @property
    def weak_targets(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.operands)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "message": self.t,
            "sub_message": self.j,
            "period": self.m,
            "level": self.level,
            "subset": list(self.subset),
            "weak_targets": list(self.weak_targets),
            "operands": [str(lab) for _, lab in self.operands],
            "segment": list(self.segment) if self.segment else None,
            "strong_receiver": self.strong_receiver,
            "strong": [str(lab) for lab in self.strong],
            "payload_bits": self.payload_bits,
            "packets": self.packets,
        }


@dataclass
class DeliveryPlan:
    cfg: SystemConfig
    idx: SchemeIndex
    demands: DemandVector
    n: int
    allocation: TimeAllocation
    messages: list[CodedMessage]
    library: Library = field(repr=False)

    @property
    def packets_used(self) -> int:
        return sum(msg.packets for msg in self.messages)

    def message_numbers(self) -> list[int]:
        return sorted({msg.t for msg in self.messages})

    def group(self, t: int) -> list[CodedMessage]:
        return [msg for msg in self.messages if msg.t == t]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(msg.describe(), sort_keys=True) + "\n" for msg in self.messages)


def _xor(arrays, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=np.uint8)
    for a in arrays:
        out[: len(a)] ^= a[:length]
    return out


def _segments(length: int, parts: int) -> list[tuple[int, int]]:
    step = -(-length // parts) if parts else 0
    return [(min(m * step, length), min((m + 1) * step, length)) for m in range(parts)]


def _period_packets(periods: list[float], n: int) -> list[int]:
    """ceil(beta * n) per period, spare channel uses shared in proportion to beta."""
    base = [math.ceil(b * n - 1e-9) for b in periods]
    used = sum(base)
    if used > n:
        raise AllocationOverflow(
            f"periods need {used} > n={n} channel uses (sum of beta = {sum(periods):.6f})",
            total_beta=sum(periods),
        )
    total = sum(periods)
    spare = n - used
    if total <= 0 or spare == 0:
        return base
    return [c + math.floor(spare * b / total) for c, b in zip(base, periods)]


def build_plan(
    cfg: SystemConfig, idx: SchemeIndex, demands: DemandVector, lib: Library, n: int
) -> DeliveryPlan:
    """Assemble the coded messages for ``demands`` in transmission order."""
    demands.check(cfg)
    if (lib.cfg, lib.idx, lib.n) != (cfg, idx, n):
        raise ValueError("library was placed for a different (cfg, idx, n)")
    K_w, K_s = cfg.num_weak, cfg.num_strong
    p, q = idx.p, idx.q
    msgs: list[CodedMessage] = []

    def operands(level, T):
        return tuple((k, PieceLabel(demands[k], level, tuple(r for r in T if r != k))) for k in T)

    def xor_payload(ops):
        length = max(lib.label_bits(lab) for _, lab in ops)
        return _xor([lib.piece(lab) for _, lab in ops], length)

    if q < K_w:
        for j, T in enumerate(subsets(K_w, q + 1), 1):
            ops = operands(q, T)
            msgs.append(CodedMessage(MULTICAST, 1, j, 1, q, T, ops, weak_payload=xor_payload(ops)))
    for i in range(q - 1, p - 1, -1):
        t = q - i + 1
        for j, T in enumerate(subsets(K_w, i + 1), 1):
            ops = operands(i, T)
            v = xor_payload(ops)
            for m, (a, b) in enumerate(_segments(len(v), K_s), 1):
                l = K_w + m
                lab = PieceLabel(demands[l], i + 1, T)
                msgs.append(
                    CodedMessage(
                        JOINT, t, j, m, i, T, ops, (m, K_s), l, (lab,),
                        weak_payload=v[a:b],
                        strong_payload=lib.piece(lab)[: lib.label_bits(lab)].copy(),
                    )
                )
    t_last = q - p + 2
    for m in range(1, K_s + 1):
        l = K_w + m
        labs = tuple(PieceLabel(demands[l], p, S) for S in subsets(K_w, p))
        msgs.append(
            CodedMessage(
                UNICAST, t_last, 1, m, p, (), strong_receiver=l, strong=labs,
                strong_payload=lib.subfile(demands[l], p).copy(),
            )
        )

    alloc = time_allocation(cfg, idx, lib.rate)
    for msg, packets in zip(msgs, _period_packets(alloc.periods(), n)):
        msg.packets = packets
    return DeliveryPlan(cfg, idx, demands, n, alloc, msgs, lib)


@dataclass
class DecodingResult:
    files: dict[int, np.ndarray | None]
    success: dict[int, bool]

    @property
    def all_success(self) -> bool:
        return all(self.success.values())


def decode(
    cfg: SystemConfig,
    plan: DeliveryPlan,
    received=None,
    caches: list[CacheContents] | None = None,
    demands: DemandVector | None = None,
) -> DecodingResult:
    """Reconstruct every receiver's demanded file.

    ``received[k-1][x]`` says whether receiver ``k`` decoded message ``x`` of
    the plan; ``None`` means an erasure-free channel. A receiver succeeds only
    if its reconstruction equals the library file bit for bit.
    """
    demands = demands or plan.demands
    lib = plan.library
    K_w, K = cfg.num_weak, cfg.num_receivers
    if caches is None:
        caches = [CacheContents(k) for k in range(1, K_w + 1)]
    if received is None:
        received = np.ones((K, len(plan.messages)), dtype=bool)
    received = np.asarray(received, dtype=bool)

    where: dict[tuple, int] = {}
    for x, msg in enumerate(plan.messages):
        where[(msg.kind, msg.level, msg.subset, msg.m)] = x

    files, success = {}, {}
    for k in range(1, K + 1):
        f = demands[k]
        if k <= K_w:
            rec = _decode_weak(k, f, plan, received[k - 1], caches[k - 1], where)
        else:
            rec = _decode_strong(k, f, plan, received[k - 1], where)
        files[k] = rec
        success[k] = rec is not None and np.array_equal(rec, lib.files[f - 1])
    return DecodingResult(files, success)


def _assemble(lib: Library, parts: dict[int, list[np.ndarray]]) -> np.ndarray:
    chunks = []
    for i in lib.levels:
        sub = np.concatenate(parts[i]) if parts[i] else np.zeros(0, np.uint8)
        chunks.append(sub[: lib.subfile_bits[i]])
    return np.concatenate(chunks) if chunks else np.zeros(0, np.uint8)


def _decode_weak(k, f, plan, got, cache, where):
    lib, K_w = plan.library, plan.cfg.num_weak
    parts: dict[int, list[np.ndarray]] = {}
    for i in lib.levels:
        L = lib.piece_bits[i]
        parts[i] = []
        for S in subsets(K_w, i):
            label = PieceLabel(f, i, S)
            if k in S:
                if label not in cache:
                    return None
                parts[i].append(cache.pieces[label])
                continue
            T = tuple(sorted(S + (k,)))
            if i == plan.idx.q:
                xs = [where.get((MULTICAST, i, T, 1))]
            else:
                xs = [where.get((JOINT, i, T, m)) for m in range(1, plan.cfg.num_strong + 1)]
            if any(x is None or not got[x] for x in xs):
                return None
            v = np.concatenate([plan.messages[x].weak_payload for x in xs])
            ops = plan.messages[xs[0]].operands
            side = []
            for r, lab in ops:
                if r == k:
                    continue
                if lab not in cache:
                    return None
                side.append(cache.pieces[lab])
            padded = np.zeros(L, dtype=np.uint8)
            padded[: len(v)] = v
            parts[i].append(_xor([padded] + side, L))
    return _assemble(lib, parts)


def _decode_strong(l, f, plan, got, where):
    lib, cfg = plan.library, plan.cfg
    m = l - cfg.num_weak
    p = plan.idx.p
    parts: dict[int, list[np.ndarray]] = {}
    x = where.get((UNICAST, p, (), m))
    if x is None or not got[x]:
        return None
    parts[p] = [plan.messages[x].strong_payload]
    for lvl in range(p + 1, plan.idx.q + 1):
        parts[lvl] = []
        L = lib.piece_bits[lvl]
        for S in subsets(cfg.num_weak, lvl):
            x = where.get((JOINT, lvl - 1, S, m))
            if x is None or not got[x]:
                return None
            piece = np.zeros(L, dtype=np.uint8)
            payload = plan.messages[x].strong_payload
            piece[: len(payload)] = payload
            parts[lvl].append(piece)
    return _assemble(lib, parts)
