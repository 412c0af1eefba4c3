"""Benchmark manager CLI: run, analyze, recipes, validate.

Exit codes: 0 success, 2 configuration/validation error, 3 deployment
failure, 4 run failure, 5 analysis failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .analysis import AnalysisError
from .applications import InvalidApplication, UnknownBenchmark, validate
from .benchmarks import BENCHMARK_NAMES, builtin_profile
from .deployment import AdapterFailure, DeploymentConfig, DeploymentError
from .distributions import DistributionError
from .recipes import RECIPE_NAMES, UnknownRecipe, recipe
from .runner import analyze_file, default_config, load_app, run_benchmark
from .simulator import SimulationError
from .workload import LoadProfile, ProfileError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEPLOY = 3
EXIT_RUN = 4
EXIT_ANALYSIS = 5

OUT_ENV_VAR = "FAASBENCH_OUT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faasbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark end to end on the simulated platforms")
    run.add_argument("benchmark", help=f"built-in name {BENCHMARK_NAMES} or application JSON path")
    run.add_argument("--config", help="deployment config JSON (default: single-platform config)")
    run.add_argument("--profile", help="load profile JSON (default: the benchmark's built-in profile)")
    run.add_argument("--seed", type=int, default=1)
    run.add_argument("--scale", type=float, default=1.0, help="scale flow counts and phase durations")
    run.add_argument("--out", default=None, help=f"output directory (or ${OUT_ENV_VAR}; default ./out)")
    run.add_argument("--charts", action="store_true", help="emit static box charts alongside reports")

    analyze = sub.add_parser("analyze", help="re-run the analyzer offline on an existing raw log")
    analyze.add_argument("log", help="path to a raw.log file")
    analyze.add_argument("--out", default=None, help="report output directory (default: alongside the log)")
    analyze.add_argument("--max-parse-errors", type=int, default=0,
                         help="exit nonzero when parse errors exceed this count")
    analyze.add_argument("--charts", action="store_true")

    recipes = sub.add_parser("recipes", help="emit a prebuilt (deployment config, profile) pair")
    recipes.add_argument("name", nargs="?", help=f"one of {RECIPE_NAMES} (omit to list)")
    recipes.add_argument("--out", default=None, help="directory for the emitted files (default .)")

    val = sub.add_parser("validate", help="validate an application spec")
    val.add_argument("app", help="built-in benchmark name or application JSON path")

    return parser


def _out_dir(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    env = os.environ.get(OUT_ENV_VAR)
    return Path(env) if env else Path("out")


def cmd_run(args) -> int:
    try:
        app = load_app(args.benchmark)
        report = validate(app)
        if not report.ok:
            for v in report.violations:
                print(f"invalid application: {v}", file=sys.stderr)
            return EXIT_CONFIG
        if args.config:
            config = DeploymentConfig.load(args.config)
            config_path = args.config
        else:
            config = default_config(app)
            config_path = "<default-single-platform>"
        if args.profile:
            profile = LoadProfile.load(args.profile)
            profile_path = args.profile
        else:
            profile = builtin_profile(args.benchmark) if args.benchmark in BENCHMARK_NAMES else None
            profile_path = "<builtin-default>"
            if profile is None:
                print("a custom application needs --profile", file=sys.stderr)
                return EXIT_CONFIG
    except (InvalidApplication, UnknownBenchmark, DeploymentError, ProfileError, DistributionError,
            FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run_benchmark(
            app,
            config,
            profile,
            seed=args.seed,
            scale=args.scale,
            out_dir=_out_dir(args.out),
            benchmark_name=args.benchmark,
            config_path=config_path,
            profile_path=profile_path,
            charts=args.charts,
        )
    except AdapterFailure as exc:
        print(f"deployment failure: {exc}", file=sys.stderr)
        return EXIT_DEPLOY
    except (DeploymentError, InvalidApplication, ProfileError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"run failure: {exc}", file=sys.stderr)
        return EXIT_RUN
    except AnalysisError as exc:
        print(f"analysis failure: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS

    a = result.analysis
    print(f"run {result.run_id}: {a.parse.records} records, "
          f"{a.complete_trees}/{len(a.trees)} complete trees, "
          f"{a.coldstart.total_cold} cold starts, {a.parse.total_drops} dropped lines")
    print(f"outputs in {result.run_dir}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    log_path = Path(args.log)
    if not log_path.exists():
        print(f"no such log file: {log_path}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out) if args.out else log_path.parent / "reports"
    try:
        analysis = analyze_file(log_path, out_dir, charts=args.charts)
    except AnalysisError as exc:
        print(f"analysis failure: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    print(f"{analysis.parse.records} records, {analysis.parse.parse_errors} parse errors, "
          f"{analysis.complete_trees}/{len(analysis.trees)} complete trees; reports in {out_dir}")
    if analysis.parse.parse_errors > args.max_parse_errors:
        print(f"parse errors exceed threshold ({args.max_parse_errors})", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


def cmd_recipes(args) -> int:
    if not args.name:
        for name in RECIPE_NAMES:
            print(name)
        return EXIT_OK
    try:
        r = recipe(args.name)
    except UnknownRecipe:
        print(f"unknown recipe {args.name!r}; known: {', '.join(RECIPE_NAMES)}", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    config_path = out / f"{r.name}.config.json"
    profile_path = out / f"{r.name}.profile.json"
    config_path.write_text(r.config.to_json() + "\n")
    profile_path.write_text(r.profile.to_json() + "\n")
    print(f"benchmark: {r.benchmark}")
    print(f"wrote {config_path}")
    print(f"wrote {profile_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        app = load_app(args.app)
    except (InvalidApplication, UnknownBenchmark, ValueError) as exc:
        print(f"cannot load application: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = validate(app)
    if report.ok:
        print(f"{app.name}: ok ({len(app.functions)} functions)")
        return EXIT_OK
    for v in report.violations:
        print(str(v))
    return EXIT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "analyze":
        return cmd_analyze(args)
    if args.command == "recipes":
        return cmd_recipes(args)
    if args.command == "validate":
        return cmd_validate(args)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
