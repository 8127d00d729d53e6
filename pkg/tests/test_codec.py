import math

import numpy as np
import pytest

from conftest import random_config
from oracles import symbolic_decodable
from scc_caching.codec import (
    JOINT,
    MULTICAST,
    UNICAST,
    AllocationOverflow,
    PieceLabel,
    PieceTooSmall,
    build_plan,
    decode,
    place,
)
from scc_caching.combinatorics import binom, subsets
from scc_caching.model import DemandVector, HomogeneousConfig, SchemeIndex, SystemConfig, validate_config
from scc_caching.rates import achievable_pair


def setup(cfg, idx, frac=0.9, bits=4000, seed=3, demands=None):
    R = frac * achievable_pair(cfg, idx).rate
    n = math.ceil(bits / R)
    lib, caches = place(cfg, idx, seed, n, R)
    dv = demands or DemandVector.all_distinct(cfg)
    return lib, caches, build_plan(cfg, idx, dv, lib, n)


def cache_labels(caches):
    return {z.receiver: set(z.pieces) for z in caches}


def W(f, i, *S):
    return PieceLabel(f, i, tuple(S))


def test_cache_contents_example1(example1):
    cfg = example1.expand()
    lib, caches, _ = setup(cfg, SchemeIndex(0, 2))
    z1 = set(caches[0].pieces)
    expected = {W(f, 1, 1) for f in range(1, 6)} | {W(f, 2, 1, 2) for f in range(1, 6)} | {W(f, 2, 1, 3) for f in range(1, 6)}
    assert z1 == expected
    for lab, bits in caches[0].pieces.items():
        assert np.array_equal(bits, lib.piece(lab))


def test_no_caching_index_has_empty_caches(example1):
    _, caches, _ = setup(example1.expand(), SchemeIndex(0, 0))
    assert all(z.bits == 0 for z in caches)


def test_cache_size_matches_memory(rng):
    for _ in range(10):
        cfg = random_config(rng, max_weak=4, max_strong=3)
        for idx in [SchemeIndex(0, cfg.num_weak), SchemeIndex(1, 1) if cfg.num_weak > 1 else SchemeIndex(0, 1)]:
            pt = achievable_pair(cfg, idx)
            n = math.ceil(20000 / pt.rate)
            _, caches = place(cfg, idx, 0, n, pt.rate)
            target = pt.memory * n
            slack = cfg.num_files * sum(binom(cfg.num_weak, i) for i in idx.levels) + 1
            for z in caches:
                assert abs(z.bits - target) <= slack + 1e-6 * target


def test_pieces_reassemble_file(example1):
    cfg = example1.expand()
    lib, _, _ = setup(cfg, SchemeIndex(0, 2))
    for f in range(1, 6):
        parts = [lib.subfile(f, i) for i in lib.levels]
        assert np.array_equal(np.concatenate(parts), lib.files[f - 1])
    assert sum(lib.subfile_bits.values()) == lib.file_bits
    v = lib.piece(W(1, 1, 2))
    with pytest.raises(ValueError):
        v[0] = 1


def _table(plan):
    rows = []
    for t in plan.message_numbers():
        grouped = {}
        for msg in plan.group(t):
            weak = frozenset(str(lab) for _, lab in msg.operands)
            entry = grouped.setdefault(msg.j, [weak, set()])
            entry[1].update(str(lab) for lab in msg.strong)
        rows.append([(w, frozenset(s)) for _, (w, s) in sorted(grouped.items())])
    return rows


def test_table_one(example1):
    cfg = example1.expand()
    _, _, plan = setup(cfg, SchemeIndex(0, 2))
    fs = frozenset
    expected = [
        [(fs({"W[1,{2,3}]^(2)", "W[2,{1,3}]^(2)", "W[3,{1,2}]^(2)"}), fs())],
        [
            (fs({"W[1,{2}]^(1)", "W[2,{1}]^(1)"}), fs({"W[4,{1,2}]^(2)", "W[5,{1,2}]^(2)"})),
            (fs({"W[1,{3}]^(1)", "W[3,{1}]^(1)"}), fs({"W[4,{1,3}]^(2)", "W[5,{1,3}]^(2)"})),
            (fs({"W[2,{3}]^(1)", "W[3,{2}]^(1)"}), fs({"W[4,{2,3}]^(2)", "W[5,{2,3}]^(2)"})),
        ],
        [
            (fs({"W[1,{}]^(0)"}), fs({"W[4,{1}]^(1)", "W[5,{1}]^(1)"})),
            (fs({"W[2,{}]^(0)"}), fs({"W[4,{2}]^(1)", "W[5,{2}]^(1)"})),
            (fs({"W[3,{}]^(0)"}), fs({"W[4,{3}]^(1)", "W[5,{3}]^(1)"})),
        ],
        [(fs(), fs({"W[4,{}]^(0)", "W[5,{}]^(0)"}))],
    ]
    assert _table(plan) == expected
    kinds = [(m.t, m.kind) for m in plan.messages]
    assert kinds[0] == (1, MULTICAST) and kinds[-1] == (4, UNICAST)
    assert plan.packets_used <= plan.n


def test_q_equal_kw_has_no_first_message(example1):
    _, _, plan = setup(example1.expand(), SchemeIndex(1, 3))
    assert plan.group(1) == []
    assert {m.kind for m in plan.messages} == {JOINT, UNICAST}


def test_p_equal_q_structure(example1):
    _, _, plan = setup(example1.expand(), SchemeIndex(1, 1))
    assert [m.t for m in plan.messages] == [1, 1, 1, 2, 2]
    assert {m.kind for m in plan.group(1)} == {MULTICAST}


def test_jsonl_is_stable(example1):
    _, _, a = setup(example1.expand(), SchemeIndex(0, 2))
    _, _, b = setup(example1.expand(), SchemeIndex(0, 2))
    assert a.to_jsonl() == b.to_jsonl()
    assert a.to_jsonl().count("\n") == len(a.messages)


@pytest.mark.parametrize("demand", ["distinct", "equal"])
def test_erasure_free_decode_and_oracle_agree(rng, demand):
    for _ in range(6):
        cfg = random_config(rng, max_weak=4, max_strong=3)
        dv = DemandVector.all_distinct(cfg) if demand == "distinct" else DemandVector.all_equal(cfg, 2)
        for idx in [SchemeIndex(0, cfg.num_weak), SchemeIndex(0, 1), SchemeIndex(cfg.num_weak, cfg.num_weak)]:
            _, caches, plan = setup(cfg, idx, demands=dv)
            assert decode(cfg, plan, caches=caches).all_success
            assert all(symbolic_decodable(plan, cache_labels(caches)).values())


def test_random_loss_patterns_match_oracle(rng):
    for _ in range(8):
        cfg = random_config(rng, max_weak=3, max_strong=3)
        _, caches, plan = setup(cfg, SchemeIndex(0, cfg.num_weak), bits=1500)
        labels = cache_labels(caches)
        for _ in range(10):
            heard = rng.random((cfg.num_receivers, len(plan.messages))) < 0.9
            got = decode(cfg, plan, heard, caches).success
            assert got == symbolic_decodable(plan, labels, heard)


def test_lost_message_only_hurts_its_targets(example1):
    cfg = example1.expand()
    _, caches, plan = setup(cfg, SchemeIndex(0, 2))
    heard = np.ones((5, len(plan.messages)), dtype=bool)
    heard[0, 0] = False
    res = decode(cfg, plan, heard, caches)
    assert res.success == {1: False, 2: True, 3: True, 4: True, 5: True}
    heard = np.ones((5, len(plan.messages)), dtype=bool)
    heard[4, len(plan.messages) - 1] = False
    assert decode(cfg, plan, heard, caches).success[5] is False


def test_missing_cache_fails(example1):
    cfg = example1.expand()
    _, caches, plan = setup(cfg, SchemeIndex(0, 2))
    res = decode(cfg, plan)
    assert not any(res.success[k] for k in (1, 2, 3))
    assert res.success[4] and res.success[5]


def test_per_level_weak_payload_accounting(rng):
    for _ in range(5):
        cfg = random_config(rng, max_weak=5, max_strong=3)
        idx = SchemeIndex(0, cfg.num_weak)
        lib, _, plan = setup(cfg, idx, bits=60000)
        K_w = cfg.num_weak
        for i in range(0, K_w):
            sent = sum(m.weak_bits for m in plan.messages if m.level == i and m.kind != UNICAST)
            target = (K_w - i) / (i + 1) * lib.subfile_bits[i]
            assert abs(sent - target) <= binom(K_w, i + 1) * 2 + 1e-3 * target


def test_piece_too_small(example1):
    cfg = example1.expand()
    with pytest.raises(PieceTooSmall):
        place(cfg, SchemeIndex(0, 3), 0, 2, 1.0)


def test_overflow_above_capacity(example1):
    cfg = example1.expand()
    idx = SchemeIndex(0, 2)
    R = 1.1 * achievable_pair(cfg, idx).rate
    lib, _ = place(cfg, idx, 0, 5000, R)
    with pytest.raises(AllocationOverflow) as err:
        build_plan(cfg, idx, DemandVector.all_distinct(cfg), lib, 5000)
    assert err.value.total_beta == pytest.approx(1.1, rel=1e-9)


def test_library_mismatch_rejected(example1):
    cfg = example1.expand()
    lib, _ = place(cfg, SchemeIndex(0, 2), 0, 5000, 1.0)
    with pytest.raises(ValueError):
        build_plan(cfg, SchemeIndex(0, 1), DemandVector.all_distinct(cfg), lib, 5000)
