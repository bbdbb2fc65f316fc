"""Command-line entry point: run / analyze / sweep / export-alpha."""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from ..analysis import belief_ratio, trap_fail_mc, trap_fail_prob
from ..deception import KernelKind, KernelSpec, aggregate_true_rate, check_rate_ordering
from ..problems import TigerConfig, sensor_accuracy, tiger_model
from ..value_iteration import alpha_csv_rows, solve_horizon
from .config import load_config
from .csvio import ALPHA_COLUMNS, write_csv
from .runner import run_experiment, run_sweep


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.episodes is not None:
        cfg = replace(cfg, episodes=args.episodes)
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(args.out))
    result = run_experiment(cfg)
    s = result.summary
    print(
        f"{cfg.problem}/{cfg.solver}/{cfg.kernel_label}: "
        f"undiscounted {s.undiscounted_mean:.4g} ± {s.undiscounted_se:.2g}, "
        f"discounted {s.discounted_mean:.4g} ± {s.discounted_se:.2g} "
        f"({s.episodes} episodes)"
    )
    for name, path in sorted(result.files.items()):
        print(f"  wrote {name}: {path}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.episodes is not None:
        cfg = replace(cfg, episodes=args.episodes)
    kernels = None
    if args.kernels:
        kernels = []
        for name in args.kernels.split(","):
            name = name.strip().lower()
            rewarded = name.endswith("-rewarded")
            kind = KernelKind(name.removesuffix("-rewarded"))
            kernels.append(
                KernelSpec(kind=kind, p_k=cfg.kernel.p_k, r_d=1.0 if rewarded else 0.0)
            )
    results = run_sweep(cfg, Path(args.out), kernels)
    for res in results:
        s = res.summary
        print(
            f"{s.kernel}: undiscounted {s.undiscounted_mean:.4g} ± {s.undiscounted_se:.2g}"
        )
    print(f"wrote {Path(args.out) / 'summary.csv'}")
    return 0


def _cmd_analyze(args) -> int:
    if args.out is not None:
        path = Path(args.out) / "summary.csv"
        if not path.exists():
            print(f"no summary.csv under {args.out}", file=sys.stderr)
            return 1
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                print(",".join(row))
        return 0
    p_t, p_k = args.p_t, args.p_k
    prob = KernelSpec(kind=KernelKind.PROB, p_k=p_k)
    rand = KernelSpec(kind=KernelKind.RAND)
    oppo = KernelSpec(kind=KernelKind.OPPO)
    print(f"sensor accuracy p_T = {p_t}, deceptive rate p_k = {p_k}")
    print(f"  belief discrepancy bound (p_0 -> 0): {belief_ratio(p_t, 0.0).ratio:.4f}")
    print(f"  belief discrepancy at p_0 = 0.5:     {belief_ratio(p_t, 0.5).ratio:.4f}")
    for spec, name in ((prob, "prob"), (rand, "rand"), (oppo, "oppo")):
        print(f"  aggregate true rate [{name}]: {aggregate_true_rate(spec, p_t):.4f}")
    for eff, tag in ((p_t, "sensor"), (0.5, "rand-kernel")):
        p2, p4 = trap_fail_prob(eff, 2), trap_fail_prob(eff, 4)
        m2 = trap_fail_mc(eff, 2, args.trials, rng=0, model_accuracy=p_t)
        m4 = trap_fail_mc(eff, 4, args.trials, rng=0, model_accuracy=p_t)
        print(
            f"  trap fail [{tag}]: P2 = {p2:.4f} (mc {m2:.4f}), "
            f"P4 = {p4:.4f} (mc {m4:.4f})"
        )
    print(f"  sensor_accuracy(d=0) = {sensor_accuracy(0, 20.0):.4f}, "
          f"(d=20, D=20) = {sensor_accuracy(20, 20.0):.4f}")
    ordering = check_rate_ordering([prob, rand, oppo], p_t)
    worst = check_rate_ordering([prob, rand, oppo], 0.5)
    print(f"  rate ordering prob > rand > oppo at p_T: {ordering}; at 0.5 limit: {worst}")
    return 0


def _cmd_export_alpha(args) -> int:
    cfg = TigerConfig(p_T=args.p_t)
    gamma_set = solve_horizon(tiger_model(cfg), args.horizon)
    write_csv(Path(args.out), ALPHA_COLUMNS, alpha_csv_rows(gamma_set))
    print(f"wrote {args.out} ({len(gamma_set.vectors)} vectors, horizon {args.horizon})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pomdp-deception",
        description="Discrete-POMDP experiments under observation deception",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--episodes", type=int)
    p_run.add_argument("--out")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="kernel grid under one config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--episodes", type=int)
    p_sweep.add_argument(
        "--kernels", help="comma list, e.g. none,prob,rand,oppo,rand-rewarded"
    )
    p_sweep.set_defaults(func=_cmd_sweep)

    p_an = sub.add_parser("analyze", help="analytic table or stored summary")
    p_an.add_argument("--out", help="experiment directory to re-read")
    p_an.add_argument("--p-t", type=float, default=0.85, dest="p_t")
    p_an.add_argument("--p-k", type=float, default=0.8, dest="p_k")
    p_an.add_argument("--trials", type=int, default=100_000)
    p_an.set_defaults(func=_cmd_analyze)

    p_alpha = sub.add_parser("export-alpha", help="value-iteration alpha vectors CSV")
    p_alpha.add_argument("--horizon", type=int, default=8)
    p_alpha.add_argument("--p-t", type=float, default=0.85, dest="p_t")
    p_alpha.add_argument("--out", required=True)
    p_alpha.set_defaults(func=_cmd_export_alpha)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
