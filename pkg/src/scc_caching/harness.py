"""Command-line front end: trade-off curves, converse bounds, cache-allocation
studies and Monte Carlo simulation.

    scc-caching tradeoff --config fig3 --out fig3.csv
    scc-caching bound --config fig2 --grid 0:80:81
    scc-caching allocation-study --config fig5 --out fig5.csv
    scc-caching simulate --config fig2 --idx 0,2 --rate-fraction 0.9 --n 200000 --trials 200

``--config`` takes a JSON file or the name of a bundled preset
(example1, fig2, fig3, fig4, fig5).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from scc_caching.channel import DEMAND_POLICIES, SimulationReport, run_trials
from scc_caching.codec import AllocationOverflow, PieceTooSmall
from scc_caching.model import ConfigError, InvalidIndex, SchemeIndex, SystemConfig, config_from_dict, validate_config
from scc_caching.rates import (
    IntractableSize,
    NegativeFactor,
    achievable_pair,
    stw_curve,
    tradeoff_curve,
    upper_bound_curve,
)

DEFAULT_GRID_POINTS = 200


@dataclass
class ExperimentSpec:
    variants: list[tuple[str, SystemConfig]]
    memory_grid: np.ndarray | None = None
    mode: str = "tradeoff"
    out: str | None = None
    seed: int = 0
    weak_counts: list[int] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.memory_grid is not None:
            g = np.asarray(self.memory_grid, dtype=float)
            if np.any(g < 0) or np.any(np.diff(g) < 0):
                raise ValueError("memory grid must be non-negative and ascending")
            self.memory_grid = g


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("scc_caching.presets").iterdir() if p.name.endswith(".json"))


def read_config_source(source: str) -> dict:
    path = Path(source)
    if path.is_file():
        return json.loads(path.read_text())
    if source in preset_names():
        return json.loads(resources.files("scc_caching.presets").joinpath(f"{source}.json").read_text())
    raise FileNotFoundError(f"no config file or preset named {source!r} (presets: {', '.join(preset_names())})")


def parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise ValueError(f"grid must look like start:stop:count, got {text!r}") from None


def expand_variants(raw: dict) -> list[tuple[str, SystemConfig]]:
    """One config per value when ``delta_weak`` is a list, else a single config."""
    dw = raw.get("delta_weak")
    if isinstance(dw, list):
        return [(f"delta_weak={v:g}", config_from_dict({**raw, "delta_weak": v})) for v in dw]
    return [("", config_from_dict(raw))]


def allocation_config(raw: dict, num_weak: int) -> SystemConfig:
    erasures = tuple(raw["erasures"])
    return validate_config(
        SystemConfig(num_weak, len(erasures) - num_weak, raw["num_files"], raw["packet_bits"], erasures)
    )


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _grid_for(spec: ExperimentSpec, max_memory: float) -> np.ndarray:
    if spec.memory_grid is not None:
        return spec.memory_grid
    return np.linspace(0.0, max_memory, DEFAULT_GRID_POINTS)


def _bound_or_blank(cfg: SystemConfig, grid: np.ndarray, label: str) -> np.ndarray:
    try:
        return upper_bound_curve(cfg, grid)
    except IntractableSize as exc:
        print(f"note: {label or 'config'}: upper bound left blank ({exc})", file=sys.stderr)
        return np.full(grid.shape, np.nan)


def cmd_tradeoff(spec: ExperimentSpec) -> str:
    """CSV of the achievable envelope, the STW baseline and the converse bound."""
    multi = len(spec.variants) > 1
    header = (["variant"] if multi else []) + [
        "M", "R_scc_envelope", "R_stw_envelope", "R_upper_bound", "best_p", "best_q",
    ]
    rows = []
    for label, cfg in spec.variants:
        curve = tradeoff_curve(cfg)
        grid = _grid_for(spec, curve.max_memory)
        scc = curve.envelope(grid)
        stw = stw_curve(cfg).envelope(grid) if cfg.is_homogeneous() else np.full(grid.shape, np.nan)
        ub = _bound_or_blank(cfg, grid, label)
        for M, a, b, c in zip(grid, scc, stw, ub):
            best = curve.best_index(M)
            rows.append(([label] if multi else []) + [M, a, b, c, best.p, best.q])
    return _write_csv(header, rows)


def cmd_bound(spec: ExperimentSpec) -> str:
    multi = len(spec.variants) > 1
    header = (["variant"] if multi else []) + ["M", "R_upper_bound", "R_scc_envelope"]
    rows = []
    for label, cfg in spec.variants:
        curve = tradeoff_curve(cfg)
        grid = _grid_for(spec, curve.max_memory)
        for M, ub, r in zip(grid, upper_bound_curve(cfg, grid), curve.envelope(grid)):
            rows.append(([label] if multi else []) + [M, ub, r])
    return _write_csv(header, rows)


def cmd_cache_allocation_study(spec: ExperimentSpec) -> str:
    """CSV of envelope rate against total cache K_w * M for each weak-set size.

    The grid is over the total cache budget, shared equally by the weak receivers.
    """
    header = ["num_weak", "total_cache", "M", "R_scc_envelope", "R_upper_bound"]
    curves = {kw: tradeoff_curve(allocation_config(spec.raw, kw)) for kw in spec.weak_counts}
    if spec.memory_grid is not None:
        grid = spec.memory_grid
    else:
        finite = [kw * c.max_memory for kw, c in curves.items()]
        grid = np.linspace(0.0, max(finite), DEFAULT_GRID_POINTS)
    rows = []
    for kw, curve in curves.items():
        cfg = allocation_config(spec.raw, kw)
        Ms = grid / kw
        ub = upper_bound_curve(cfg, Ms)
        for T, M, r, b in zip(grid, Ms, curve.envelope(Ms), ub):
            rows.append([kw, T, M, r, b])
    return _write_csv(header, rows)


def cmd_simulate(spec: ExperimentSpec, idx: SchemeIndex, rate_fraction: float, n: int, trials: int,
                 demand_policy: str = "worst_case_scan") -> tuple[SimulationReport, str | None]:
    """Run the Monte Carlo check at ``rate_fraction`` times R_(p,q).

    Returns the report and an error message; on allocation overflow the report
    records the infeasible regime instead of an error probability.
    """
    (_, cfg), = spec.variants
    R = rate_fraction * achievable_pair(cfg, idx).rate
    try:
        return run_trials(cfg, idx, R, n, trials, demand_policy, spec.seed), None
    except AllocationOverflow as exc:
        report = SimulationReport(
            config=cfg.to_dict(), idx=[idx.p, idx.q], R=R, n=n, trials=trials,
            demand_policy=demand_policy, per_receiver_failures=[0] * cfg.num_receivers,
            p_e=None, seed=spec.seed, p_e_defined=False, beta_total=exc.total_beta,
        )
        return report, f"infeasible: {exc}"


def _parse_idx(text: str) -> SchemeIndex:
    try:
        p, q = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--idx expects p,q, got {text!r}") from None
    return SchemeIndex(p, q)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scc-caching", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="config JSON path or preset name")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid", help="memory grid start:stop:count")
    sub.add_parser("tradeoff", parents=[common], help="achievable envelope vs STW vs converse")
    sub.add_parser("bound", parents=[common], help="converse upper bound")
    sub.add_parser("allocation-study", parents=[common], help="rate vs total cache for several K_w")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo placement/delivery/decoding")
    sim.add_argument("--idx", type=_parse_idx, required=True, help="scheme index p,q")
    sim.add_argument("--n", type=int, default=200_000, help="channel uses per delivery")
    sim.add_argument("--trials", type=int, default=200)
    sim.add_argument("--rate-fraction", type=float, default=0.9)
    sim.add_argument("--demand-policy", choices=DEMAND_POLICIES, default="worst_case_scan")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = read_config_source(args.config)
        grid = parse_grid(args.grid) if args.grid else (parse_grid(raw["grid"]) if "grid" in raw else None)
        if args.command == "allocation-study":
            spec = ExperimentSpec([], grid, args.command, args.out, args.seed,
                                  list(raw.get("weak_counts", [])), raw)
            if not spec.weak_counts:
                raise ConfigError("allocation-study config needs a 'weak_counts' list")
            _emit(cmd_cache_allocation_study(spec), args.out)
            return 0
        spec = ExperimentSpec(expand_variants(raw), grid, args.command, args.out, args.seed, raw=raw)
        if args.command == "tradeoff":
            _emit(cmd_tradeoff(spec), args.out)
        elif args.command == "bound":
            _emit(cmd_bound(spec), args.out)
        else:
            if len(spec.variants) != 1:
                raise ConfigError("simulate needs a single configuration")
            report, error = cmd_simulate(spec, args.idx, args.rate_fraction, args.n, args.trials,
                                         args.demand_policy)
            _emit(report.to_json(), args.out)
            if error:
                print(f"error: {error}", file=sys.stderr)
                return 3
    except (ConfigError, InvalidIndex, NegativeFactor, IntractableSize, PieceTooSmall,
            ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
