"""Command-line front end: simulate, sweep, and decay subcommands."""

from __future__ import annotations

import argparse
import sys

from . import bench
from .control import ControllerError


def _parse_range(text: str) -> list[int]:
    if ".." not in text:
        raise argparse.ArgumentTypeError("range must look like a..b")
    lo, hi = text.split("..", 1)
    a, b = int(lo), int(hi)
    if b < a:
        raise argparse.ArgumentTypeError(f"empty range {text}")
    return list(range(a, b + 1))


def _load_config(path: str) -> bench.ScenarioConfig:
    with open(path) as fh:
        return bench.parse_config(fh.read())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtpc",
        description="Closed-loop control experiments on networked systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the root seed")
        p.add_argument("--out-dir", default=None, help="override the output directory")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel per-agent solves within a step")

    p_sim = sub.add_parser("simulate", help="run every configured controller once")
    common(p_sim)

    p_sweep = sub.add_parser("sweep", help="sweep k or kappa for the decentralized controller")
    common(p_sweep)
    p_sweep.add_argument("--vary", choices=("k", "kappa"), required=True)
    p_sweep.add_argument("--range", type=_parse_range, required=True, dest="values",
                         help="inclusive integer range a..b")

    p_decay = sub.add_parser("decay", help="export a decay profile")
    common(p_decay)
    p_decay.add_argument("--mode", choices=("kkt", "truncation", "trajectory"),
                         required=True)
    p_decay.add_argument("--range", type=_parse_range, default=None, dest="values",
                         help="truncation radii a..b (defaults to 0..diameter)")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if args.command == "simulate":
            result = bench.run_experiment(
                cfg, out_dir=args.out_dir, seed=args.seed, workers=args.workers
            )
            for row in result.summary:
                print(f"{row.tag}: cost={row.total_cost:.6g} regret={row.regret:.6g}")
        elif args.command == "sweep":
            rows = bench.run_sweep(
                cfg, args.vary, args.values,
                out_dir=args.out_dir, seed=args.seed, workers=args.workers,
            )
            for row in rows:
                print(f"{row.tag}: cost={row.total_cost:.6g} regret={row.regret:.6g}")
        else:
            profile = bench.run_decay(
                cfg, args.mode,
                out_dir=args.out_dir, seed=args.seed,
                kappa_range=args.values, workers=args.workers,
            )
            print(
                f"fit: alpha={profile.fit_alpha:.6g} rho={profile.fit_rho:.6g} "
                f"r2={profile.fit_r2:.6g}"
            )
    except (ControllerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
