"""
Command-line front end: run, sweep, validate and plot.

Exit codes: 0 success, 1 validation failure, 2 bad config or input,
3 numerical failure.
"""
import argparse
import json
import os
import sys
import time
from contextlib import contextmanager
from typing import Iterator, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from src.core.errors import CMNLError, ConfigError, InputError, NumericalError
from src.core.export import (
    ChartSeries,
    RunManifest,
    get_version,
    read_trace_csv,
    render_regret_chart,
    write_sweep_csv,
    write_trace_csv,
)
from src.core.harness import ExperimentConfig, load_config, replicate, sweep
from src.core.logging_utils import get_logger, set_log_level
from src.core.validation import FAULTS, run_validation

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_NUMERICAL = 3


@contextmanager
def progress_bar(total: int, desc: str, enabled: bool = True) -> Iterator:
    bar = tqdm(total=total, desc=desc, disable=not enabled, leave=False)

    def callback(done: int, _total: int) -> None:
        bar.update(1)

    try:
        yield callback
    finally:
        bar.close()


def parse_n_values(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError("N", f"--N must be a comma-separated list of integers, got '{text}'")
    if not values or any(v < 1 for v in values):
        raise ConfigError("N", "--N needs at least one positive integer")
    return values


def _single_algorithm(config: ExperimentConfig) -> ExperimentConfig:
    if len(config.algorithms) != 1:
        raise ConfigError("algorithm", "run takes a single algorithm; use sweep to compare several")
    return config.with_overrides(algorithm=config.algorithms[0])


def _write_run(summary, out_dir: str, command: str, wall_time: float) -> RunManifest:
    trace_path = write_trace_csv(summary, os.path.join(out_dir, "trace.csv"))
    manifest = RunManifest(
        command=command,
        config=summary.config.to_dict(),
        artifacts={"trace": trace_path},
        seeds={"replications": summary.seeds},
        version=get_version(),
        wall_time=wall_time,
        fit_warnings=summary.fit_warnings,
    )
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest


def cmd_run(config_path: str, out_dir: str, parallel: bool = True, show_progress: bool = True) -> int:
    config = _single_algorithm(load_config(config_path))
    started = time.perf_counter()
    with progress_bar(config.replications, f"{config.algorithms[0]} N={config.N}", show_progress) as callback:
        summary = replicate(config, parallel=parallel, progress_callback=callback)
    _write_run(summary, out_dir, "run", time.perf_counter() - started)
    print(f"{summary.algorithm} N={summary.N}: final regret {summary.final_regret_mean:.4f} +/- {summary.final_regret_std:.4f}")
    return EXIT_OK


def cmd_sweep(
    config_path: str,
    n_values: Sequence[int],
    out_dir: str,
    parallel: bool = True,
    show_progress: bool = True,
) -> int:
    config = load_config(config_path)
    started = time.perf_counter()
    total = len(n_values) * len(config.algorithms) * config.replications
    with progress_bar(total, "sweep", show_progress) as callback:
        rows = sweep(config, n_values, parallel=parallel, progress_callback=callback)

    artifacts = {}
    series = []
    seeds = {}
    for row in rows:
        run_dir = os.path.join(out_dir, f"N{row.N}", row.algorithm)
        manifest = _write_run(row.summary, run_dir, "sweep", row.summary.wall_time)
        key = f"N{row.N}/{row.algorithm}"
        artifacts[f"{key}/trace"] = manifest.artifacts["trace"]
        seeds[key] = row.summary.seeds
        t = np.arange(1, row.summary.regret_mean.shape[0] + 1, dtype=float)
        series.append(ChartSeries(f"{row.algorithm} (N={row.N})", t, row.summary.regret_mean))
        print(f"N={row.N:<4} {row.algorithm:<12} final regret {row.final_regret_mean:.4f} +/- {row.final_regret_std:.4f}")

    artifacts["sweep"] = write_sweep_csv(rows, os.path.join(out_dir, "sweep.csv"))
    artifacts["chart"] = render_regret_chart(series, os.path.join(out_dir, "regret.svg"))
    RunManifest(
        command="sweep",
        config=config.to_dict(),
        artifacts=artifacts,
        seeds=seeds,
        version=get_version(),
        wall_time=time.perf_counter() - started,
        fit_warnings=sum(row.summary.fit_warnings for row in rows),
        n_values=list(n_values),
    ).write(os.path.join(out_dir, "manifest.json"))
    return EXIT_OK


def cmd_validate(quick: bool = False, fault: Optional[str] = None, show_progress: bool = True) -> int:
    with progress_bar(11, "validate", show_progress) as callback:
        results = run_validation(quick=quick, fault=fault, progress_callback=callback)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.seconds:7.2f}s  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION_FAILED
    return EXIT_OK


def _trace_label(trace_dir: str) -> str:
    manifest_path = os.path.join(trace_dir, "manifest.json")
    if os.path.isfile(manifest_path):
        with open(manifest_path, "r", encoding="utf-8") as f:
            config = json.load(f).get("config", {})
        if "algorithm" in config and "N" in config:
            return f"{config['algorithm']} (N={config['N']})"
    return os.path.basename(os.path.normpath(trace_dir))


def cmd_plot(traces: Sequence[str], out_path: str) -> int:
    series = []
    for target in traces:
        if os.path.isdir(target):
            trace_dir, csv_path = target, os.path.join(target, "trace.csv")
        else:
            trace_dir, csv_path = os.path.dirname(target) or ".", target
        columns = read_trace_csv(csv_path)
        series.append(ChartSeries(_trace_label(trace_dir), columns["t"], columns["regret_mean"]))
    if not series:
        raise InputError("plot needs at least one trace")
    render_regret_chart(series, out_path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmnl", description="Censored-MNL assortment and pricing simulator")
    parser.add_argument(
        "--log-level",
        choices=("debug", "info", "warning", "error"),
        default=None,
        help="override CMNL_LOG_LEVEL for this invocation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replicate one algorithm and write trace.csv + manifest.json")
    run.add_argument("--config", required=True, help="flat JSON experiment config")
    run.add_argument("--out", required=True, help="output directory")

    sweep_cmd = sub.add_parser("sweep", help="replicate every algorithm over several N values")
    sweep_cmd.add_argument("--config", required=True, help="flat JSON experiment config")
    sweep_cmd.add_argument("--N", required=True, help="comma-separated N values, e.g. 10,15,20")
    sweep_cmd.add_argument("--out", required=True, help="output directory")

    for command in (run, sweep_cmd):
        command.add_argument("--sequential", action="store_true", help="run replications in the calling thread")
        command.add_argument("--quiet", action="store_true", help="hide the progress bar")

    validate = sub.add_parser("validate", help="run the invariant and oracle checks")
    validate.add_argument("--quick", action="store_true", help="reduced trial counts")
    validate.add_argument("--inject-fault", choices=FAULTS, default=None, help="corrupt a component to test the suite")
    validate.add_argument("--quiet", action="store_true", help="hide the progress bar")

    plot = sub.add_parser("plot", help="render regret.svg from existing trace.csv files")
    plot.add_argument("--trace", nargs="+", required=True, help="run directories or trace.csv files")
    plot.add_argument("--out", required=True, help="output SVG path")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_log_level(args.log_level)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, parallel=not args.sequential, show_progress=not args.quiet)
        elif args.command == "sweep":
            return cmd_sweep(
                args.config, parse_n_values(args.N), args.out,
                parallel=not args.sequential, show_progress=not args.quiet,
            )
        elif args.command == "validate":
            return cmd_validate(quick=args.quick, fault=args.inject_fault, show_progress=not args.quiet)
        else:
            return cmd_plot(args.trace, args.out)
    except ConfigError as e:
        print(f"config error [{e.key}]: {e.message}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except InputError as e:
        print(f"input error: {e.message}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except NumericalError as e:
        print(f"numerical error: {e.message} {e.diagnostics}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CMNLError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_VALIDATION_FAILED
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
