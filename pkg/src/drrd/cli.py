"""Command-line entry point: ``drrd --config run.yaml [overrides]``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import dataio
from .errors import ConfigError, RDError
from .estimator import estimate_with_bootstrap, estimate_dr
from .simulation import run_scenario

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drrd", description="Doubly robust sharp regression-discontinuity estimation.")
    p.add_argument("--config", metavar="PATH", help="YAML run configuration")
    p.add_argument("--mode", choices=dataio.MODES, help="override config mode")
    p.add_argument("--data", metavar="CSV", help="override csv.path (estimate mode)")
    p.add_argument("--out", metavar="PATH", help="report path (default: stdout)")
    p.add_argument("--format", choices=dataio.FORMATS, help="report format")
    p.add_argument("--seed", type=int, help="override seed")
    p.add_argument("--bootstrap", type=int, metavar="REPS", help="bootstrap replications (0 disables)")
    p.add_argument("--pretty", action="store_true", help="human-readable errors")
    return p


def _resolve(args) -> dataio.RunConfig:
    cfg = dataio.load_run_config(args.config) if args.config else dataio.RunConfig()
    if args.mode:
        cfg.mode = args.mode
    if args.data:
        cfg.csv_path = args.data
    if args.out:
        cfg.output_path = args.out
    if args.format:
        cfg.output_format = args.format
    if args.seed is not None:
        cfg.seed = args.seed
    if args.bootstrap is not None:
        cfg.bootstrap_reps = args.bootstrap
        if cfg.scenario is not None:
            cfg.scenario.bootstrap_reps = args.bootstrap
    return cfg.validate()


def cmd_estimate(cfg: dataio.RunConfig) -> dict:
    dataset = dataio.load_csv(cfg.csv_path, cfg.csv)
    if cfg.bootstrap_reps:
        est = estimate_with_bootstrap(dataset, cfg.rd, cfg.bootstrap_reps, cfg.level, cfg.seed)
    else:
        est = estimate_dr(dataset, cfg.rd)
    return dataio.estimate_report(est, cfg.to_dict(), cfg.seed)


def cmd_simulate(cfg: dataio.RunConfig) -> dict:
    sc = cfg.scenario
    rd = replace(cfg.rd, cutoff=sc.dgp.cutoff)
    cfg.rd = rd
    report = run_scenario(
        sc.dgp, rd, sc.n_grid, sc.reps, cfg.seed,
        bootstrap_reps=sc.bootstrap_reps, level=sc.level, baseline=sc.baseline,
    )
    return dataio.simulate_report(report, cfg.to_dict())


def _emit_error(err: RDError, pretty: bool) -> None:
    if pretty:
        loc = f" ({err.location})" if err.location else ""
        print(f"error [{err.code}]{loc}: {err.message}", file=sys.stderr)
    else:
        print(json.dumps({"error": err.to_dict()}), file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        report = cmd_estimate(cfg) if cfg.mode == "estimate" else cmd_simulate(cfg)
        if cfg.output_path:
            dataio.write_report(report, cfg.output_path, cfg.output_format)
        else:
            sys.stdout.write(dataio.render_report(report, cfg.output_format))
    except ConfigError as err:
        _emit_error(err, args.pretty)
        return EXIT_USAGE
    except RDError as err:
        _emit_error(err, args.pretty)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
