"""Command line entry point: ``odcm <verb> --config <path|preset> --out <dir>``.

Verbs: ``solve`` (one energy), ``sweep`` (all energies), ``spectra`` (overlay
data only), ``robustness`` and ``validate-mc``.  Exit codes: 0 success,
2 configuration error, 3 every sweep point failed, 4 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from .errors import ConfigError, OdcmError
from .scenario import (
    PRESETS,
    energy_tag,
    json_safe,
    load_scenario,
    robustness_study,
    run_scenario,
    validate_mc,
    write_overlay_csv,
    write_report,
    write_sweep_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_IO = 0, 2, 3, 4


def build_parser():
    p = argparse.ArgumentParser(prog="odcm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in (("solve", "optimal modulation at a single energy"),
                       ("sweep", "energy sweep with DD comparison"),
                       ("spectra", "G / F_T overlay data per energy"),
                       ("robustness", "rate increase under amplitude noise"),
                       ("validate-mc", "Monte-Carlo check of the rate")):
        sp = sub.add_parser(verb, help=text)
        sp.add_argument("--config", required=True,
                        help=f"scenario JSON file or preset name ({', '.join(PRESETS)})")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed (robustness and MC streams)")
        if verb == "solve":
            sp.add_argument("--energy", type=float, default=None,
                            help="energy to solve at (default: first of the scenario)")
        if verb == "sweep":
            sp.add_argument("--no-plots", action="store_true")
    return p


def _resolve(args):
    s = load_scenario(args.config)
    changes = {}
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        changes["seed"] = args.seed
        if s.mc is not None:
            changes["mc"] = {**s.mc, "seed": args.seed}
    if getattr(args, "energy", None) is not None:
        changes["energies"] = [args.energy]
    elif args.verb == "solve":
        changes["energies"] = s.energies[:1]
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return dataclasses.replace(s, **changes) if changes else s


def _write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(json_safe(obj), fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def run(args):
    s = _resolve(args)
    os.makedirs(args.out, exist_ok=True)
    if args.verb in ("solve", "sweep"):
        report = run_scenario(s, threads=args.threads, robustness=args.verb == "sweep",
                              mc=False)
        write_report(report, args.out, plots=not getattr(args, "no_plots", False))
        return EXIT_ALL_FAILED if report.all_failed else EXIT_OK
    if args.verb == "spectra":
        report = run_scenario(dataclasses.replace(s, linearized_from_dd=False), threads=args.threads)
        for p in report.points:
            if p.ok:
                write_overlay_csv(report.omega, p.overlay,
                                  os.path.join(args.out, f"overlay_E{energy_tag(p.E_requested)}.csv"))
        write_sweep_csv(report, os.path.join(args.out, "sweep.csv"))
        return EXIT_ALL_FAILED if report.all_failed else EXIT_OK
    if args.verb == "robustness":
        table = robustness_study(s)
        _write_json({"version": 1, "scenario": s.to_dict(), "robustness": table.to_dict()},
                    os.path.join(args.out, "report.json"))
        return EXIT_OK
    if args.verb == "validate-mc":
        out = validate_mc(s)
        _write_json({"version": 1, "scenario": s.to_dict(), "mc": out},
                    os.path.join(args.out, "report.json"))
        return EXIT_OK
    raise ConfigError(f"unknown verb {args.verb}")


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OdcmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED


if __name__ == "__main__":
    sys.exit(main())
