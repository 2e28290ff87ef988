"""``falsify`` command line: run, validate, monitor."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .harness import (
    ALGORITHMS,
    ConfigError,
    load_config,
    results_to_csv,
    results_to_json,
    run_experiment,
)
from .stl import robustness
from .systems import OutOfDomain


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="falsify", description="Causality-aided falsification of STL specifications.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded falsification trials")
    run.add_argument("--config", required=True, help="config file, or a bundled config name")
    run.add_argument("--algo", choices=sorted(ALGORITHMS), help="override the configured algorithm")
    run.add_argument("--trials", type=int, help="override the number of trials")
    run.add_argument("--seed", type=int, help="override the seed")
    run.add_argument("--max-iterations", type=int, help="override the iteration budget")
    run.add_argument("--timeout", type=float, help="override the per-trial timeout (seconds)")
    run.add_argument("--out", help="output file (default: stdout)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--workers", type=int, default=1, help="run trials in this many processes")
    run.add_argument(
        "--no-timing",
        action="store_true",
        help="leave wall-clock fields empty so output is byte-reproducible",
    )

    val = sub.add_parser("validate", help="check a config and its network")
    val.add_argument("--config", required=True)

    mon = sub.add_parser("monitor", help="simulate one input and print every formula's robustness")
    mon.add_argument("--config", required=True)
    mon.add_argument("--input", required=True, help="comma-separated input values")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config).with_overrides(
        algorithm=args.algo,
        trials=args.trials,
        seed=args.seed,
        max_iterations=args.max_iterations,
        timeout=args.timeout,
    )

    def progress(t, r):
        status = "falsified" if r.success else ("error" if r.error else "not falsified")
        logging.info("trial %d: %s after %d iterations (%.2fs)", t, status, r.iterations, r.wall_time)

    results, summary = run_experiment(config, workers=args.workers, progress=progress)
    timing = not args.no_timing
    text = results_to_csv(results, summary, timing) if args.format == "csv" else results_to_json(results, summary, timing)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"{summary.success_count}/{summary.trials} trials falsified", file=sys.stderr)
    return 0 if summary.success_count > 0 else 1


def _cmd_validate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"invalid: {msg}", file=sys.stderr)
        return 1
    net = f", network of {len(config.network)} nodes" if config.network is not None else ""
    print(f"ok: {config.system_name}, {len(config.formulas)} formulas, target {config.target}{net}")
    return 0


def _cmd_monitor(args) -> int:
    config = load_config(args.config)
    try:
        x = np.array([float(v) for v in args.input.split(",")])
    except ValueError:
        raise ConfigError([f"--input: expected comma-separated numbers, got {args.input!r}"]) from None
    trace = config.build_system().simulate(x)
    for fid, formula in config.formulas.items():
        rho = robustness(formula, trace)
        mark = "  (target)" if fid == config.target else ""
        print(f"{fid}\t{rho!r}{mark}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "monitor": _cmd_monitor}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"error: {msg}", file=sys.stderr)
        return 2
    except OutOfDomain as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
