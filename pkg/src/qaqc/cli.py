"""Command-line entry point.

Subcommands::

    qaqc run <config.json> [--seed N] [--jobs N] [--output-dir DIR]
    qaqc scan-depth <config.json> --max-depth K [--seed N] [--jobs N] [--output-dir DIR]
    qaqc verify [--jobs N]

Exit codes: 0 on success, 1 on invalid configuration, 2 when a run finishes
without reaching its tolerance. ``--jobs`` (fallback: the QAQC_THREADS
environment variable) caps worker threads where checks can run in parallel.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import CircuitParseError
from .experiments import load_spec, run_experiment, scan_depth
from .verify import verify_suite


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("QAQC_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _add_common(parser: argparse.ArgumentParser, with_config: bool = True) -> None:
    if with_config:
        parser.add_argument("config", help="path to the run's JSON document")
        parser.add_argument("--seed", type=int, default=None, help="override the config seed")
        parser.add_argument("--output-dir", default="runs", help="where to write CSV/JSON outputs")
    parser.add_argument("--jobs", type=int, default=None, help="worker-thread cap")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qaqc", description="variational compiler toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one compilation experiment")
    _add_common(run_p)

    scan_p = sub.add_parser("scan-depth", help="best cost per depth budget")
    _add_common(scan_p)
    scan_p.add_argument("--max-depth", type=int, required=True)

    verify_p = sub.add_parser("verify", help="run the oracle/invariant check suite")
    _add_common(verify_p, with_config=False)

    args = parser.parse_args(argv)

    if args.command == "verify":
        return 0 if verify_suite(jobs=_jobs(args)) else 1

    try:
        spec = load_spec(args.config, seed_override=args.seed)
    except (CircuitParseError, OSError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1

    if args.command == "run":
        report = run_experiment(spec, output_dir=args.output_dir)
        print(
            f"{spec.name}: best cost {report.result.best_cost.value:.6g} "
            f"(epsilon {report.result.epsilon_approx:.6g}) "
            f"in {len(report.rows)} iterations, {report.wall_clock:.1f}s"
        )
        if report.csv_path is not None:
            print(f"wrote {report.csv_path} and {report.json_path}")
        return 0 if report.succeeded else 2

    rows = scan_depth(spec, args.max_depth, output_dir=args.output_dir)
    for depth_cap, best, err in rows:
        print(f"depth {depth_cap}: best cost {best:.6g} (std error {err:.2g})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
