"""Command-line harness.

Subcommands:
  simulate         one seeded end-to-end run, metrics to CSV
  experiment       a sweep family across replicates, raw + summary CSV
  validate-config  parse and validate a scenario file

Exit codes: 0 success, 1 configuration error, 2 runtime/solver error,
3 I/O error.
"""

import argparse
import csv
import logging
import sys

from .allocation import InfeasibleConstraintsError
from .channel import TopologyError
from .config import ConfigError, ScenarioConfig, load_config
from .experiments import EXPERIMENTS, run_experiment, write_csv
from .pipeline import PipelineStageError, run_pipeline
from .precoding import DegenerateClusteringError

log = logging.getLogger("thznoma")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_IO = 3


def _add_logging_flags(parser, suppress=False):
    default = argparse.SUPPRESS if suppress else False
    parser.add_argument(
        "--quiet", action="store_true", default=default, help="only log errors"
    )
    parser.add_argument(
        "--verbose", action="store_true", default=default, help="log debug detail"
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="thznoma",
        description="THz MIMO-NOMA link-level simulator and EE optimizer",
    )
    _add_logging_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one seeded pipeline")
    _add_logging_flags(sim, suppress=True)
    sim.add_argument("--config", help="scenario file (defaults when omitted)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV path")

    exp = sub.add_parser("experiment", help="run an experiment family")
    _add_logging_flags(exp, suppress=True)
    exp.add_argument("--id", required=True, choices=sorted(EXPERIMENTS))
    exp.add_argument("--config", help="scenario file (defaults when omitted)")
    exp.add_argument("--replicates", type=int, default=None)
    exp.add_argument("--out", required=True, help="output CSV path")
    exp.add_argument(
        "--sweep",
        default=None,
        help="comma-separated sweep values overriding the experiment default",
    )

    val = sub.add_parser("validate-config", help="check a scenario file")
    _add_logging_flags(val, suppress=True)
    val.add_argument("--config", required=True)
    return parser


def _load(path):
    if path is None:
        return ScenarioConfig()
    return load_config(path)


def _simulate(args):
    cfg = _load(args.config)
    result = run_pipeline(cfg, args.seed)
    metrics = result.metrics()
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(metrics.keys())
            writer.writerow(
                [
                    f"{v:.12g}" if isinstance(v, float) else
                    ("true" if v is True else "false" if v is False else v)
                    for v in metrics.values()
                ]
            )
    except OSError as exc:
        log.error("cannot write %s: %s", args.out, exc)
        return EXIT_IO
    log.info(
        "seed %d: EE %.4g bits/J, sum rate %.4g bps",
        args.seed,
        metrics["ee_bits_per_joule"],
        metrics["sum_rate_bps"],
    )
    return EXIT_OK


def _experiment(args):
    cfg = _load(args.config)
    sweep = None
    if args.sweep:
        try:
            sweep = [float(v) for v in args.sweep.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --sweep value: {exc}") from exc
    result = run_experiment(
        args.id, cfg, sweep_values=sweep, replicates=args.replicates
    )
    try:
        summary_path = write_csv(result, args.out)
    except OSError as exc:
        log.error("cannot write %s: %s", args.out, exc)
        return EXIT_IO
    log.info(
        "%s: %d rows -> %s (summary %s)",
        args.id,
        len(result.rows),
        args.out,
        summary_path,
    )
    return EXIT_OK


def _validate(args):
    load_config(args.config)
    log.info("config OK: %s", args.config)
    print(f"valid configuration ({args.config})")
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    level = logging.INFO
    if args.quiet:
        level = logging.ERROR
    if args.verbose:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            return _simulate(args)
        if args.command == "experiment":
            return _experiment(args)
        if args.command == "validate-config":
            return _validate(args)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (
        TopologyError,
        DegenerateClusteringError,
        InfeasibleConstraintsError,
        PipelineStageError,
        FloatingPointError,
    ) as exc:
        log.error("runtime error: %s", exc)
        return EXIT_RUNTIME
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
