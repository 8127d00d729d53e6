"""Packet erasure broadcast channel and the idealized capacity-achieving code.

A period of ``t`` packets delivers ``b`` bits to a receiver iff the receiver
got at least ``b / F`` of the packets. For a joint-encoding block, a receiver
holding the strong payload as side information needs only the weak payload's
worth of packets; any other receiver must collect both.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from scc_caching import kernels
from scc_caching.codec import JOINT, MULTICAST, UNICAST, DeliveryPlan, build_plan, decode, place
from scc_caching.model import DemandVector, SchemeIndex, SystemConfig

# stream identifiers; library bits use their own stream in codec
_CHANNEL_STREAM = 0x434841
_DEMAND_STREAM = 0x444D44

DEMAND_POLICIES = ("worst_case_scan", "uniform_random")


@dataclass(frozen=True)
class ChannelRealization:
    counts: np.ndarray  # (K, periods) non-erased packets
    packets: np.ndarray  # (periods,)
    seed: int
    trial: int


def realize(cfg: SystemConfig, plan: DeliveryPlan, seed: int, trial: int = 0) -> ChannelRealization:
    """Draw i.i.d. packet erasures for every receiver over the plan's periods."""
    packets = np.array([msg.packets for msg in plan.messages], dtype=np.int64)
    bounds = np.concatenate([[0], np.cumsum(packets)])
    counts = np.empty((cfg.num_receivers, len(packets)), dtype=np.int64)
    for k in range(1, cfg.num_receivers + 1):
        key = kernels.derive_key(seed, _CHANNEL_STREAM, trial, k)
        counts[k - 1] = kernels.erasure_counts(key, bounds, 1.0 - cfg.erasure(k))
    return ChannelRealization(counts, packets, seed, trial)


def decode_flags(cfg: SystemConfig, plan: DeliveryPlan, real: ChannelRealization) -> np.ndarray:
    """Boolean (K, periods) array: did receiver k decode period x."""
    K = cfg.num_receivers
    cap = real.counts * cfg.packet_bits
    flags = np.zeros((K, len(plan.messages)), dtype=bool)
    for x, msg in enumerate(plan.messages):
        if msg.kind == MULTICAST:
            flags[:, x] = cap[:, x] >= msg.weak_bits
        elif msg.kind == JOINT:
            need = np.full(K, msg.weak_bits + msg.strong_bits)
            for k in msg.subset:
                need[k - 1] = msg.weak_bits
            flags[:, x] = cap[:, x] >= need
        elif msg.kind == UNICAST:
            flags[:, x] = cap[:, x] >= msg.strong_bits
        else:
            raise ValueError(f"unknown message kind {msg.kind!r}")
    return flags


@dataclass
class SimulationReport:
    config: dict
    idx: list[int]
    R: float
    n: int
    trials: int
    demand_policy: str
    per_receiver_failures: list[int]
    p_e: float | None
    seed: int
    generator_id: str = kernels.GENERATOR_ID
    p_e_defined: bool = True
    beta_total: float | None = None
    per_demand: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _demand_vectors(cfg, policy, trials, seed):
    if policy == "worst_case_scan":
        return [DemandVector.all_distinct(cfg), DemandVector.all_equal(cfg)]
    if policy == "uniform_random":
        out = []
        for t in range(trials):
            words = kernels.random_words(kernels.derive_key(seed, _DEMAND_STREAM, t), 0, cfg.num_receivers)
            out.append(DemandVector(tuple(int(w % cfg.num_files) + 1 for w in words)))
        return out
    raise ValueError(f"unknown demand policy {policy!r}; choose from {DEMAND_POLICIES}")


def run_trials(
    cfg: SystemConfig,
    idx: SchemeIndex,
    R: float,
    n: int,
    trials: int,
    demand_policy: str = "worst_case_scan",
    seed: int = 0,
) -> SimulationReport:
    """Monte Carlo estimate of the error probability at rate ``R``.

    ``worst_case_scan`` runs ``trials`` channel draws for the all-distinct and
    the all-equal demand vector and reports the worse of the two;
    ``uniform_random`` draws one demand vector per trial and reports the
    overall failure fraction. Raises :class:`AllocationOverflow` when the
    periods do not fit in ``n`` channel uses.
    """
    report = SimulationReport(
        config=cfg.to_dict(), idx=[idx.p, idx.q], R=R, n=n, trials=trials,
        demand_policy=demand_policy, per_receiver_failures=[0] * cfg.num_receivers,
        p_e=None, seed=seed,
    )
    lib, caches = place(cfg, idx, seed, n, R)
    vectors = _demand_vectors(cfg, demand_policy, trials, seed)
    if trials == 0:
        report.p_e_defined = False
        return report

    plans = {}
    for dv in vectors:
        if dv not in plans:
            plans[dv] = build_plan(cfg, idx, dv, lib, n)
    report.beta_total = next(iter(plans.values())).allocation.total

    def one_trial(plan, trial_id):
        real = realize(cfg, plan, seed, trial_id)
        flags = decode_flags(cfg, plan, real)
        res = decode(cfg, plan, flags, caches)
        return [not res.success[k] for k in range(1, cfg.num_receivers + 1)]

    if demand_policy == "worst_case_scan":
        worst = 0.0
        for v, dv in enumerate(vectors):
            errors = 0
            for t in range(trials):
                failed = one_trial(plans[dv], v * trials + t)
                errors += any(failed)
                for k, bad in enumerate(failed):
                    report.per_receiver_failures[k] += bad
            report.per_demand.append({"demands": list(dv.demands), "errors": errors, "p_e": errors / trials})
            worst = max(worst, errors / trials)
        report.p_e = worst
    else:
        errors = 0
        for t, dv in enumerate(vectors):
            failed = one_trial(plans[dv], t)
            errors += any(failed)
            for k, bad in enumerate(failed):
                report.per_receiver_failures[k] += bad
        report.per_demand.append({"demands": "uniform_random", "errors": errors, "p_e": errors / trials})
        report.p_e = errors / trials
    return report
