"""Command-line entry point ``irs-parafac``.

Subcommands: ``nmse-sweep``, ``convergence``, ``complexity``, ``single-run``.
Settings come from the desk profile (or ``--paper-profile``), then the
``--config`` file, then explicit flags. Failures print one JSON object on
stderr and exit nonzero.
"""

import argparse
from dataclasses import replace
import json
import logging
import sys

from ..errors import ConfigError, IrsParafacError
from .config import PAPER_TRIALS, ExperimentConfig, load_config
from .experiments import (
    complexity_report,
    measured_als_iterations,
    run_convergence_study,
    run_nmse_sweep,
    single_run,
)
from .report import emit_results, format_table

log = logging.getLogger("irs_parafac")


def _snr_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat YAML key/value file with ExperimentConfig fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, help="Monte-Carlo trials per grid point")
    common.add_argument("--snr", type=_snr_list, help="comma-separated SNR grid in dB, e.g. 0,10,20")
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--paper-profile", action="store_true",
                        help=f"use the published trial count ({PAPER_TRIALS})")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--no-plots", action="store_true", help="skip SVG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="irs-parafac",
                                description="PARAFAC channel estimation experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("nmse-sweep", parents=[common], help="NMSE vs SNR for LS, KRF and ALS")
    conv = sub.add_parser("convergence", parents=[common], help="ALS iteration counts")
    conv.add_argument("--vary", default="path_products",
                      choices=["path_products", "path-products", "reflector_counts",
                               "reflector-counts"])
    cx = sub.add_parser("complexity", parents=[common], help="flop-order table")
    cx.add_argument("--als-iter", type=float, help="ALS iteration count to plug in")
    cx.add_argument("--measure", action="store_true",
                    help="measure the ALS iteration count with a sweep first")
    sub.add_parser("single-run", parents=[common], help="one trial with ALS error traces")
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.desk()
    if args.config:
        cfg = load_config(args.config, cfg)
    if args.paper_profile:
        cfg = replace(cfg, trials=PAPER_TRIALS)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.snr is not None:
        overrides["snr_grid_db"] = args.snr
    if args.workers is not None:
        overrides["workers"] = args.workers
    try:
        return replace(cfg, **overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def run(args) -> int:
    cfg = resolve_config(args)
    if args.command == "nmse-sweep":
        report = run_nmse_sweep(cfg)
    elif args.command == "convergence":
        report = run_convergence_study(cfg, args.vary.replace("-", "_"))
    elif args.command == "complexity":
        als_iter = args.als_iter
        if args.measure:
            als_iter = measured_als_iterations(cfg)
            log.info("measured median ALS iterations: %g", als_iter)
        report = complexity_report(cfg, als_iter)
    else:
        report = single_run(cfg)
    files = emit_results(report, args.out, plots=not args.no_plots)
    print(format_table(report))
    for f in files:
        print(f"wrote {f}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except OSError as exc:
        print(json.dumps({"error": "IoError", "message": str(exc)}), file=sys.stderr)
        return 1
    except IrsParafacError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
