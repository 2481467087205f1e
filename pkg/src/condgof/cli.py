"""Command-line front end.

Subcommands:
  test        run one test on CSV data against a JSON model config
  experiment  seeded rejection-rate study on a built-in problem
  landscape   power-criterion landscape over a 1-D grid of test locations

Accept/reject is data, not an error: the exit code is 0 either way and
nonzero only on operational failure.  Every command is deterministic given
its flags and --seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import load_sample
from .harness import (
    METHODS,
    MethodConfig,
    powcri_landscape,
    run_experiment,
    run_single_test,
    write_landscape_csv,
    write_report_csv,
)
from .models import PROBLEM_NAMES, load_model_file, problem_spec


def _add_common_test_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    parser.add_argument("--bootstrap", type=int, default=400,
                        help="bootstrap replicates (or permutations for mmd; default 400)")
    parser.add_argument("--J", type=int, default=5, dest="num_locations",
                        help="number of test locations for fscd/fscd-opt (default 5)")
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--train-frac", type=float, default=0.3,
                        help="training fraction for fscd-opt (default 0.3)")
    parser.add_argument("--opt-steps", type=int, default=200,
                        help="optimizer steps for fscd-opt (default 200)")
    parser.add_argument("--learning-rate", type=float, default=0.01,
                        help="optimizer learning rate for fscd-opt (default 0.01)")


def _method_config(args: argparse.Namespace) -> MethodConfig:
    return MethodConfig(
        method=args.method,
        num_locations=args.num_locations,
        bootstrap_reps=args.bootstrap,
        train_fraction=args.train_frac,
        opt_steps=args.opt_steps,
        learning_rate=args.learning_rate,
    )


def _cmd_test(args: argparse.Namespace) -> int:
    model = load_model_file(args.model)
    sample = load_sample(args.data, model.dx, model.dy)
    result = run_single_test(model, sample, _method_config(args), args.alpha, args.seed)
    json.dump(result.to_dict(), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    try:
        n_list = [int(part) for part in args.n_list.split(",") if part.strip()]
    except ValueError:
        raise SystemExit(f"--n-list must be comma-separated integers, got {args.n_list!r}")
    if not n_list:
        raise SystemExit("--n-list must name at least one sample size")
    report = run_experiment(args.problem, _method_config(args), n_list, args.trials, args.alpha, args.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{report.problem}_{report.method}"
    json_path = out_dir / f"{stem}.json"
    with json_path.open("w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_report_csv(report, out_dir / f"{stem}.csv")
    from .plots import save_rejection_curve

    save_rejection_curve(report, out_dir / f"{stem}.png")
    for row in report.rows:
        print(f"{report.problem} {report.method} n={row.n}: rate={row.rate:.3f} ({row.rejections}/{row.trials})")
    print(f"wrote {json_path}, {stem}.csv, {stem}.png in {out_dir}")
    return 0


def _cmd_landscape(args: argparse.Namespace) -> int:
    problem = problem_spec(args.problem)
    if problem.model.dx != 1:
        raise SystemExit(f"landscape grids are one-dimensional; problem {args.problem!r} has dx={problem.model.dx}")
    if args.grid_points < 2 or args.grid_max <= args.grid_min:
        raise SystemExit("need grid-min < grid-max and at least 2 grid points")
    sample = problem.data_law.sample(args.n, np.random.default_rng(args.seed))
    grid = np.linspace(args.grid_min, args.grid_max, args.grid_points)
    table = powcri_landscape(problem.model, sample, grid)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_landscape_csv(table, out)
    from .plots import save_landscape

    png = out.with_suffix(".png")
    save_landscape(table, png, title=f"{args.problem} (n={args.n})")
    peak = table.argmax_location()
    print(f"criterion argmax at v={float(peak[0]):.4f}; wrote {out} and {png}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condgof",
        description="Goodness-of-fit tests for conditional density models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run one test on CSV data + model config")
    p_test.add_argument("--method", required=True, choices=METHODS)
    p_test.add_argument("--data", required=True, help="CSV sample with header x1..x{dx},y1..y{dy}")
    p_test.add_argument("--model", required=True, help="JSON model configuration file")
    _add_common_test_flags(p_test)
    p_test.set_defaults(func=_cmd_test)

    p_exp = sub.add_parser("experiment", help="seeded rejection-rate study")
    p_exp.add_argument("--problem", required=True, choices=PROBLEM_NAMES)
    p_exp.add_argument("--method", required=True, choices=METHODS)
    p_exp.add_argument("--n-list", required=True, help="comma-separated sample sizes, e.g. 200,400,800")
    p_exp.add_argument("--trials", type=int, default=300, help="trials per sample size (default 300)")
    p_exp.add_argument("--out", required=True, help="output directory for report files")
    _add_common_test_flags(p_exp)
    p_exp.set_defaults(func=_cmd_experiment)

    p_land = sub.add_parser("landscape", help="power-criterion landscape on a 1-D grid")
    p_land.add_argument("--problem", required=True, choices=PROBLEM_NAMES)
    p_land.add_argument("--grid-min", type=float, required=True)
    p_land.add_argument("--grid-max", type=float, required=True)
    p_land.add_argument("--grid-points", type=int, default=61)
    p_land.add_argument("--n", type=int, required=True, help="sample size to draw from the problem's data law")
    p_land.add_argument("--seed", type=int, default=0)
    p_land.add_argument("--out", required=True, help="output CSV path (figure lands next to it)")
    p_land.set_defaults(func=_cmd_landscape)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:  # operational failures map to a nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
