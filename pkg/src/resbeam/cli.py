"""Command-line entry point: ``resbeam run|validate|list-experiments``."""
from __future__ import annotations

import argparse
import json
import sys

from . import config as cfg
from .errors import (ConfigError, NumericalDivergenceError, ResbeamError, SolverFailureError)
from .experiments import EXPERIMENTS, default_jobs, run_experiment

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _parser():
    p = argparse.ArgumentParser(prog="resbeam", description="Resonant beam link simulator")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config",
                        help="YAML or JSON config, nested or dotted keys (or an output summary JSON)")
        sp.add_argument("--seed", type=int, help="override the config seed")

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment", choices=sorted(EXPERIMENTS))
    common(r)
    r.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    r.add_argument("--out", default="out", help="output directory")
    v = sub.add_parser("validate", help="check a config and print it with defaults filled in")
    common(v)
    sub.add_parser("list-experiments", help="list experiment names")
    return p


def _load(args):
    raw = cfg.load_config(args.config) if args.config else {}
    if args.seed is not None:
        raw = {**raw, "seed": args.seed}
    return cfg.validate_config(raw)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.verb == "list-experiments":
        for name in EXPERIMENTS:
            print(f"{name:24s} {EXPERIMENTS[name][1]}")
        return EXIT_OK
    try:
        c = _load(args)
        if args.verb == "validate":
            print(json.dumps(c, sort_keys=True, indent=2))
            print(f"config_hash={cfg.config_hash(c)}", file=sys.stderr)
            return EXIT_OK
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError(["--jobs: must be >= 1"])
        summary = run_experiment(args.experiment, c, args.out, args.jobs or default_jobs())
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDivergenceError, SolverFailureError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ResbeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(summary["headline"], sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
