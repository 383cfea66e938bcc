"""Command-line entry points.

    cipsac run      --config exp.yaml --out results.csv
    cipsac sweep    --config exp.yaml --out results.csv
    cipsac psr      --policy both --out psr.csv
    cipsac codebook gen|inspect ...

``run`` expects the experiment file to describe a single sweep point;
``sweep`` accepts any grid. SNRs are given in dB everywhere and converted
to noise variances once at config load.
"""

import argparse
import sys
from dataclasses import replace

from .exceptions import CipsacError
from .harness import (ExperimentSpec, PsrSpec, inspect_codebook,
                      load_experiment_file, run_experiment, run_psr)
from .sparc import make_random_codebook, save_codebook


def _add_run_flags(p):
    p.add_argument("--config", required=True, help="experiment YAML file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--trials", type=int, help="override trial count")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--threads", type=int, help="override worker count")
    p.add_argument("--timing", action="store_true",
                   help="record wall time per point (CSV bytes then vary)")


def _spec_from_args(args) -> ExperimentSpec:
    spec = load_experiment_file(args.config)
    updates = {}
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.timing:
        updates["measure_time"] = True
    return replace(spec, **updates).validate() if updates else spec


def _cmd_run(args) -> int:
    spec = _spec_from_args(args)
    n_points = len(spec.sweep_points())
    if args.command == "run" and n_points != 1:
        print(f"error: 'run' needs a single sweep point, config has {n_points} "
              f"(use 'cipsac sweep')", file=sys.stderr)
        return 2
    table = run_experiment(spec)
    table.write(args.out)
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


def _cmd_psr(args) -> int:
    policies = ("zero", "gaussian") if args.policy == "both" else (args.policy,)
    spec = PsrSpec(policies=policies, n_sc=args.n, m_grid=args.m,
                   sigma_sq=args.sigma_sq, n_pilot=args.pilots,
                   corrupt_index=args.corrupt_index, trials=args.trials,
                   seed=args.seed)
    table = run_psr(spec)
    table.write(args.out)
    for row in table.rows:
        print(f"{row.policy}: mean PSR {row.mean_psr:.6g} "
              f"(std {row.std_psr:.6g}, {row.trials} trials)")
    return 0


def _cmd_codebook(args) -> int:
    if args.subcommand == "gen":
        cb = make_random_codebook(args.layers, args.alphabet, args.length,
                                  args.seed)
        save_codebook(cb, args.out)
        print(f"wrote codebook V={args.layers} D={args.alphabet} "
              f"N={args.length} to {args.out}")
    else:
        info = inspect_codebook(args.path)
        for key, value in info.items():
            print(f"{key}: {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cipsac",
        description="Link-level simulator for coded integrated passive "
                    "sensing and communication")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single-point experiment")
    _add_run_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="multi-axis experiment")
    _add_run_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_run)

    p_psr = sub.add_parser("psr", help="peak-to-side-lobe-ratio comparison")
    p_psr.add_argument("--policy", choices=["zero", "gaussian", "both"],
                       default="both")
    p_psr.add_argument("--out", required=True)
    p_psr.add_argument("--trials", type=int, default=1000)
    p_psr.add_argument("--seed", type=int, default=0)
    p_psr.add_argument("--n", type=int, default=16, help="subcarriers")
    p_psr.add_argument("--m", type=int, default=16, help="Doppler grid")
    p_psr.add_argument("--sigma-sq", type=float, default=0.1)
    p_psr.add_argument("--pilots", type=int, default=1)
    p_psr.add_argument("--corrupt-index", type=int, default=8)
    p_psr.set_defaults(func=_cmd_psr)

    p_cb = sub.add_parser("codebook", help="codebook file utilities")
    cb_sub = p_cb.add_subparsers(dest="subcommand", required=True)
    p_gen = cb_sub.add_parser("gen")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--layers", type=int, required=True)
    p_gen.add_argument("--alphabet", type=int, required=True)
    p_gen.add_argument("--length", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.set_defaults(func=_cmd_codebook)
    p_ins = cb_sub.add_parser("inspect")
    p_ins.add_argument("--path", required=True)
    p_ins.set_defaults(func=_cmd_codebook)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CipsacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
