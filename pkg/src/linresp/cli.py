"""Command-line front end.

Commands:
  linresp example N [flags]   run a built-in benchmark preset
  linresp run config.json     run an experiment described by a JSON file
  linresp validate MODEL      finite-difference check of force derivatives
  linresp slope results.csv   fit log-log bias slopes per (estimator, scheme)

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .estimators import ConfigurationError
from .experiments import (ExperimentConfig, fit_slope, read_rows,
                          run_experiment)
from .model import BUILTIN_MODELS, validate_force_derivatives

EXAMPLE_PRESETS = {
    1: ExperimentConfig(model="example1", scheme="bacab",
                        estimators=("mp1", "mp2"),
                        dt_grid=(0.05, 0.1, 0.2, 0.4),
                        T_final=100.0, T_burn=20.0,
                        n_realizations=100_000, eta=0.05),
    2: ExperimentConfig(model="example2", scheme="bacab",
                        estimators=("mp1", "mp2"),
                        dt_grid=(0.05, 0.1, 0.2, 0.4),
                        T_final=200.0, T_burn=20.0,
                        n_realizations=200_000, observable="f1", eta=0.05),
    3: ExperimentConfig(model="example3", scheme="bacab",
                        estimators=("gk1", "gk2"),
                        dt_grid=(0.05, 0.1, 0.2, 0.4),
                        T_final=25.0, T_burn=20.0,
                        n_realizations=200_000, eta=0.1),
}


def _add_override_flags(parser):
    parser.add_argument("--scheme")
    parser.add_argument("--estimator", action="append",
                        help="repeatable; replaces the preset estimators")
    parser.add_argument("--dt", type=float, help="single timestep")
    parser.add_argument("--dt-grid", help="comma-separated timesteps")
    parser.add_argument("--samples", type=int, help="realization count")
    parser.add_argument("--time", type=float, help="physical time T_final")
    parser.add_argument("--burn-in", type=float, help="burn-in time")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--checkpoints", help="comma-separated times")
    parser.add_argument("--eta", type=float, help="NEMD perturbation size")
    parser.add_argument("--nemd-mode", choices=("forward", "central"))
    parser.add_argument("--g-coefficient", type=float,
                        help="coefficient c of g = c|p|^2 for the "
                             "momentum-perturbation weight")
    parser.add_argument("--center", help='observable center, number or "auto"')
    parser.add_argument("--observable", help="observable name")
    parser.add_argument("--reference", type=float,
                        help="reference value for the bias column")
    parser.add_argument("--reference-source", default="",
                        help="provenance note for --reference")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--workers", type=int, default=1)


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if args.scheme:
        updates["scheme"] = args.scheme
    if args.estimator:
        updates["estimators"] = tuple(args.estimator)
    if args.dt is not None and args.dt_grid:
        raise ConfigurationError("--dt and --dt-grid are exclusive")
    if args.dt is not None:
        updates["dt_grid"] = (args.dt,)
    if args.dt_grid:
        updates["dt_grid"] = tuple(float(x) for x in args.dt_grid.split(","))
    if args.samples is not None:
        updates["n_realizations"] = args.samples
    if args.time is not None:
        updates["T_final"] = args.time
    if args.burn_in is not None:
        updates["T_burn"] = args.burn_in
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.checkpoints:
        updates["checkpoints"] = tuple(
            float(x) for x in args.checkpoints.split(","))
    if args.eta is not None:
        updates["eta"] = args.eta
    if args.nemd_mode:
        updates["nemd_mode"] = args.nemd_mode
    if args.g_coefficient is not None:
        updates["g_coefficient"] = args.g_coefficient
    if args.center is not None:
        updates["center"] = (args.center if args.center == "auto"
                             else float(args.center))
    if args.observable:
        updates["observable"] = args.observable
    if args.reference is not None:
        updates["reference_value"] = args.reference
        updates["reference_provenance"] = args.reference_source
    if args.out:
        updates["output_path"] = args.out
    if args.workers:
        updates["workers"] = args.workers
    return replace(config, **updates).validate()


def _print_summary(rows):
    print(f"{'estimator':<10}{'dt':>8}{'estimate':>14}{'stderr':>12}"
          f"{'bias':>12}")
    for row in rows:
        if row["checkpoint_time"] != "":
            continue
        bias = row["bias"]
        bias_s = f"{bias:>12.6g}" if bias != "" else f"{'':>12}"
        print(f"{row['estimator']:<10}{row['dt']:>8g}"
              f"{row['estimate']:>14.6g}{row['stderr']:>12.3g}{bias_s}")


def cmd_example(args) -> int:
    preset = EXAMPLE_PRESETS[args.n]
    config = _apply_overrides(preset, args)
    rows = run_experiment(config)
    _print_summary(rows)
    return 0


def cmd_run(args) -> int:
    with open(args.config) as fh:
        data = json.load(fh)
    config = ExperimentConfig.from_dict(data)
    rows = run_experiment(config)
    _print_summary(rows)
    return 0


def cmd_validate(args) -> int:
    model = BUILTIN_MODELS[args.model]()
    report = validate_force_derivatives(model, n_points=100, step=1e-4,
                                        tol=1e-5)
    for name, err in report["max_errors"].items():
        print(f"{name:<14} max error {err:.3e}")
    print("PASS" if report["passed"] else "FAIL")
    return 0 if report["passed"] else 1


def cmd_slope(args) -> int:
    rows = read_rows(args.csv)
    groups = {}
    for row in rows:
        if row["checkpoint_time"] != "" or row["bias"] == "":
            continue
        key = (row["estimator"], row["scheme"])
        groups.setdefault(key, []).append(
            (float(row["dt"]), abs(float(row["bias"]))))
    if not groups:
        print("no summary rows with a bias column found", file=sys.stderr)
        return 1
    print(f"{'estimator':<10}{'scheme':<8}{'slope':>8}{'r2':>8}")
    for (est, scheme), pts in sorted(groups.items()):
        slope, _, r2 = fit_slope(pts)
        print(f"{est:<10}{scheme:<8}{slope:>8.3f}{r2:>8.3f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="linresp",
        description="Linear-response estimators for Langevin dynamics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ex = sub.add_parser("example", help="run a built-in benchmark preset")
    p_ex.add_argument("n", type=int, choices=(1, 2, 3))
    _add_override_flags(p_ex)
    p_ex.set_defaults(func=cmd_example)

    p_run = sub.add_parser("run", help="run an experiment from a JSON file")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate",
                           help="check force derivatives by differences")
    p_val.add_argument("model", choices=sorted(BUILTIN_MODELS))
    p_val.set_defaults(func=cmd_validate)

    p_slope = sub.add_parser("slope", help="fit bias slopes from a CSV")
    p_slope.add_argument("csv")
    p_slope.set_defaults(func=cmd_slope)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigurationError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
