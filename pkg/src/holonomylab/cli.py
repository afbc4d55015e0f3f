"""Command-line front end.

Subcommands: build (validate + summarize a scenario), holonomy (span,
closure, classify), verify SUITE (one verification suite), report (run the
config's suites and write the report), plot (report + figures).  Global
flags: --config, --seed, --samples, --tol, --out; see README.md.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import config as config_mod
from . import lorentz, report as report_mod, scenarios
from .errors import GeometryError


def _parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="path to a JSON run configuration")
    shared.add_argument("--seed", type=int, help="override the config seed")
    shared.add_argument("--samples", type=int,
                        help="override each suite's primary sample count")
    shared.add_argument("--tol", type=float,
                        help="override the agreement/calabi residual tolerance")
    shared.add_argument("--out",
                        help="report path (report/verify/holonomy) or plot "
                             "directory (plot)")
    p = argparse.ArgumentParser(prog="holonomylab", parents=[shared],
                                description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[shared],
                   help="validate a scenario and print its summary")
    sub.add_parser("holonomy", parents=[shared],
                   help="harvest, close, and classify the holonomy algebra")
    v = sub.add_parser("verify", parents=[shared],
                       help="run one verification suite")
    v.add_argument("suite", choices=[s for s in config_mod.SUITES
                                     if s != "holonomy"])
    sub.add_parser("report", parents=[shared],
                   help="run the configured suites and write the report")
    sub.add_parser("plot", parents=[shared],
                   help="run the curve-producing suites and write figures")
    return p


def _load(args) -> config_mod.ScenarioConfig:
    cfg = (config_mod.load_config(args.config) if args.config
           else config_mod.default_config())
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
        updates["scenario_seed"] = args.seed
    if args.samples is not None:
        counts = dict(cfg.samples)
        for key in ("points", "hol_points", "cone_samples", "curves",
                    "diamond_curves"):
            counts[key] = max(args.samples,
                              1000 if key == "cone_samples" else 1)
        updates["samples"] = counts
    if args.tol is not None:
        tols = dict(cfg.tolerances)
        tols["agreement"] = args.tol
        tols["calabi"] = args.tol
        updates["tolerances"] = tols
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _print_suites(report: dict):
    for s in report["suites"]:
        line = f"{s['name']}: {s['verdict']}"
        if s["error"]:
            line += f" ({s['error']})"
        print(line)


def _run_and_write(cfg, args) -> int:
    report, curves = report_mod.run_config(cfg)
    path = args.out or cfg.report_path()
    report_mod.write_report(report, path)
    _print_suites(report)
    print(f"report written to {path}")
    return 0 if report["passed"] else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "build":
            recipe = scenarios.make_scenario(cfg.family, seed=cfg.scenario_seed,
                                             epsilon=cfg.epsilon)
            space = lorentz.build_scenario(recipe)
            print(json.dumps({
                "family": recipe.name,
                "type_tag": recipe.type_tag,
                "dim": space.chart.dim,
                "factor_dim": recipe.n,
                "epsilon": float(recipe.epsilon),
                "expected_hol_dim": recipe.expected_dim,
                "coordinates": list(space.chart.coord_names),
            }, indent=2))
            return 0
        if args.command == "holonomy":
            cfg = dataclasses.replace(cfg, suites=("holonomy",))
            return _run_and_write(cfg, args)
        if args.command == "verify":
            cfg = dataclasses.replace(cfg, suites=(args.suite,))
            return _run_and_write(cfg, args)
        if args.command == "report":
            return _run_and_write(cfg, args)
        if args.command == "plot":
            wanted = tuple(s for s in cfg.suites if s in ("diamond", "rays"))
            cfg = dataclasses.replace(cfg, suites=wanted or ("diamond", "rays"))
            report, curves = report_mod.run_config(cfg)
            from .plots import emit_plots
            written = emit_plots(report, curves, args.out or cfg.plot_dir())
            for path in written:
                print(path)
            return 0 if report["passed"] else 1
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
