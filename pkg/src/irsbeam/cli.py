"""Experiment harness: scenario sweeps, paired baselines, CSV emission.

Reproduces the evaluation protocol: sweep the power budget or the number of
reflecting elements, run each requested algorithm on the same per-trial
channel realization (verified by a channel-hash column), and write one
summary row per solve plus optional per-iteration traces.

    irsbeam --config configs/paper_defaults.json --algorithm ao-general \
            --algorithm no-irs --sweep power --values 1,5,10 --trials 3 \
            --seed 7 --out results/ --trace
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .driver import ALGORITHMS, solve
from .errors import ConfigError
from .scenario import ScenarioConfig, generate_scenario, load_config

SUMMARY_COLUMNS = (
    "scenario_id", "algorithm", "M", "P_max_W", "final_wsr_bits_per_hz",
    "power_W", "max_interference_W", "iterations", "wall_ms", "channel_hash",
)
TRACE_COLUMNS = ("scenario_id", "algorithm", "iteration", "wsr_bits_per_hz")


@dataclass(frozen=True)
class ExperimentSpec:
    config: ScenarioConfig
    algorithms: tuple
    sweep: str = None            # "power" | "elements" | None
    values: tuple = ()
    trials: int = 1
    seed: int = 0
    out_dir: Path = Path(".")
    trace: bool = False

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; expected subset of {ALGORITHMS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sweep not in (None, "power", "elements"):
            raise ValueError("sweep must be 'power' or 'elements'")
        if self.sweep is not None and not self.values:
            raise ValueError("a sweep needs at least one value")
        if "ao-fast" in self.algorithms and self.config.num_pus != 1:
            raise ValueError("ao-fast requires a single-PU configuration (num_pus == 1)")


def _sweep_configs(spec: ExperimentSpec):
    """Yield (point index, scenario tag fragment, per-point config)."""
    if spec.sweep is None:
        yield 0, "", spec.config
    elif spec.sweep == "power":
        for i, value in enumerate(spec.values):
            yield i, f"_P{value:g}", spec.config.replace(max_power_w=float(value))
    else:
        for i, value in enumerate(spec.values):
            yield i, f"_M{int(value)}", spec.config.replace(num_elements=int(value))


def run_experiment(spec: ExperimentSpec):
    """Execute the spec; returns (summary_path, trace_path or None).

    Within a trial every algorithm consumes the identical channel realization
    and the identical initialization RNG stream, so rows are paired.
    """
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    trace_rows = []
    for trial in range(spec.trials):
        for point, tag, cfg in _sweep_configs(spec):
            cfg = cfg.replace(seed=spec.seed + trial)
            channels = generate_scenario(cfg)
            chan_hash = channels.content_hash()
            scenario_id = f"trial{trial}{tag}"
            for algorithm in spec.algorithms:
                rng = np.random.default_rng([spec.seed, trial, point])
                report = solve(channels, cfg, algorithm, rng=rng)
                final = report.records[-1]
                if final.max_interference_w > max(cfg.interference_caps_w) * (1.0 + 1e-6):
                    raise RuntimeError(
                        f"{scenario_id}/{algorithm}: interference "
                        f"{final.max_interference_w:.3e} W exceeds the cap"
                    )
                summary_rows.append((
                    scenario_id, algorithm, cfg.num_elements, repr(cfg.max_power_w),
                    repr(final.wsr_bits), repr(final.power_w),
                    repr(final.max_interference_w), report.iterations,
                    f"{report.total_wall_ms:.3f}", chan_hash,
                ))
                if spec.trace:
                    trace_rows.extend(
                        (scenario_id, algorithm, r.index, repr(r.wsr_bits))
                        for r in report.records
                    )

    summary_path = spec.out_dir / "summary.csv"
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(summary_rows)
    trace_path = None
    if spec.trace:
        trace_path = spec.out_dir / "trace.csv"
        with open(trace_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            writer.writerows(trace_rows)
    return summary_path, trace_path


def validate_config(path) -> ScenarioConfig:
    """Parse and validate a JSON config; raises ConfigError listing every violation."""
    return load_config(path)


def _parse_values(text: str, sweep: str):
    parts = [p for p in text.replace(",", " ").split() if p]
    if sweep == "elements":
        return tuple(int(p) for p in parts)
    return tuple(float(p) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsbeam",
        description="Weighted-sum-rate experiments for the IRS-assisted MIMO "
                    "cognitive-radio downlink.",
    )
    parser.add_argument("--config", required=True, help="JSON scenario configuration")
    parser.add_argument("--algorithm", action="append", choices=ALGORITHMS,
                        help="algorithm to run (repeatable; default ao-general)")
    parser.add_argument("--sweep", choices=("power", "elements"),
                        help="sweep axis: transmit power (W) or reflecting elements")
    parser.add_argument("--values", default="",
                        help="comma-separated sweep values, e.g. 1,5,10")
    parser.add_argument("--trials", type=int, default=1, help="independent channel draws")
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument("--out", default=".", help="output directory for CSV files")
    parser.add_argument("--trace", action="store_true",
                        help="also write per-iteration WSR traces")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = validate_config(args.config)
    except ConfigError as exc:
        for line in exc.diagnostics:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    try:
        spec = ExperimentSpec(
            config=cfg,
            algorithms=tuple(args.algorithm or ["ao-general"]),
            sweep=args.sweep,
            values=_parse_values(args.values, args.sweep) if args.sweep else (),
            trials=args.trials,
            seed=args.seed,
            out_dir=Path(args.out),
            trace=args.trace,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        summary_path, trace_path = run_experiment(spec)
    except Exception as exc:  # solver/IO failures surface as diagnostics, not tracebacks
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(summary_path)
    if trace_path is not None:
        print(trace_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
