"""Command line entry point.

Subcommands ``flux``, ``spectrum`` and ``g2`` force the observable; ``sweep``
runs the config as written; ``compare`` runs every model and prints the
discrepancy table. Exit status is 0 only if every point was computed.
"""
from __future__ import annotations

import argparse
import os
import sys

from ..errors import CavsimError, ParseError, ValidationError
from .config import load_config
from .output import emit_csv, emit_plot_script, format_metrics
from .scenario import run_scenario

EXIT_OK, EXIT_FAILED_POINTS, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cavsim", description="Atom-cavity benchmark sweeps.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [("flux", "port fluxes"), ("spectrum", "incoherent spectra"),
                        ("g2", "intensity correlations"), ("compare", "all models, discrepancy table"),
                        ("sweep", "run the config as written")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="scenario file")
        sp.add_argument("--model", choices=["analytic", "reduced", "full", "all"], default=None)
        sp.add_argument("--out", default=None, help="CSV path (a .gp plot script is written next to it)")
        sp.add_argument("--points", type=int, default=None, help="override the number of sweep points")
        sp.add_argument("--nmax-cap", type=int, default=None, help="largest Fock cutoff of the full model")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: CAVSIM_THREADS)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        models = None
        if args.command == "compare":
            models = ["all"]
        elif args.model:
            models = [args.model]
        obs = args.command if args.command in ("flux", "spectrum", "g2") else None
        cfg = cfg.with_overrides(models=models, points=args.points, observable=obs,
                                 nmax_cap=args.nmax_cap, csv_path=args.out)
    except (ParseError, ValidationError) as exc:
        print(f"cavsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cavsim: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    report = run_scenario(cfg, threads=args.threads)

    csv_path = cfg.csv_path
    if csv_path:
        plot_path = cfg.plot_path or os.path.splitext(csv_path)[0] + ".gp"
        try:
            os.makedirs(os.path.dirname(os.path.abspath(csv_path)), exist_ok=True)
            emit_csv(report, csv_path)
            emit_plot_script(report, plot_path, csv_path)
        except OSError as exc:
            print(f"cavsim: cannot write output: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {csv_path} and {plot_path}")
    print(f"{cfg.observable}: {len(cfg.sweep.values)} points, models {', '.join(cfg.models)}")
    summary = format_metrics(report)
    if summary:
        print(summary)
    return EXIT_OK if report.failures == 0 else EXIT_FAILED_POINTS


def run() -> None:
    try:
        sys.exit(main())
    except CavsimError as exc:  # pragma: no cover - defensive
        print(f"cavsim: {exc}", file=sys.stderr)
        sys.exit(EXIT_FAILED_POINTS)


if __name__ == "__main__":
    run()
