"""
Command line entry point.

    chanrecon run <config> [--preset figN] [--out DIR] [--seed S] [--threads T]
    chanrecon validate <config> [--preset figN]
    chanrecon list-presets

Exit codes: 0 success, 1 config error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace

from .experiment import PRESETS, ConfigError, load_config, parse_config, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parser():
    ap = argparse.ArgumentParser(prog="chanrecon",
                                 description="Downlink channel reconstruction sweeps.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep and write CSV results")
    run.add_argument("config", nargs="?", help="INI config (omit to use a preset alone)")
    run.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--out", help="output directory (default results/<name>)")
    run.add_argument("--seed", type=int)
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--trials", type=int, help="override the trial count")

    val = sub.add_parser("validate", help="check a config and print it fully resolved")
    val.add_argument("config")
    val.add_argument("--preset", choices=sorted(PRESETS))

    sub.add_parser("list-presets", help="list built-in presets")
    return ap


def _load(args):
    if args.config:
        return load_config(args.config, args.preset)
    if args.preset is None:
        raise ConfigError([(None, "give a config file, a --preset, or both")])
    return parse_config("", args.preset)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list-presets":
        for name, over in PRESETS.items():
            desc = ", ".join(f"{k}={v}" for k, v in over.items() if k != "techniques")
            print(f"{name:6s} {desc}; techniques: {', '.join(over.get('techniques', ()))}")
        return EXIT_OK

    try:
        cfg = _load(args)
        if args.command == "run":
            over = {}
            if args.seed is not None:
                over["seed"] = args.seed
            if args.trials is not None:
                over["trials"] = args.trials
            if over:
                # re-check through the parser so overrides are validated too
                cfg = parse_config(replace(cfg, **over).to_ini())
            if args.threads < 1:
                raise ConfigError([(None, "--threads must be at least 1")])
    except ConfigError as exc:
        for line in exc.format_lines():
            print(line, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        sys.stdout.write(cfg.to_ini())
        return EXIT_OK

    name = args.preset or os.path.splitext(os.path.basename(args.config))[0]
    out = args.out or os.path.join("results", name)
    t0 = time.perf_counter()
    try:
        report = run_experiment(cfg, out, args.threads)
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    n_trials = len(cfg.rho_ul_db) * cfg.trials
    print(f"{n_trials - len(report.failures)}/{n_trials} trials ok in "
          f"{time.perf_counter() - t0:.1f} s -> {out}")
    if report.failures:
        print(f"{len(report.failures)} trial(s) failed; see {out}/failures.csv", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
