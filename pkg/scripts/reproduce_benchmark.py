#!/usr/bin/env python3
"""Regenerate every benchmark artifact the plots consume, in one go.

Produces, under data/benchmark/:
  sweep_k_<seed>.csv          regret of the decentralized controller vs window
  sweep_kappa_<seed>.csv      regret vs truncation radius at a fixed window
  decay_trajectory_<seed>.csv closed-loop gap to the centralized loop vs radius
  decay_kkt_<seed>.csv        saddle-inverse spatial decay profile
  decay_truncation_<seed>.csv centre-node solution gap vs radius
  regret_vs_time_<seed>.csv   cumulative regret per forecast-error model
  plus one per-run trace CSV per controller.

Takes a few minutes; rerunning reproduces identical bytes.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from dtpc import bench  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "benchmark"


def load(name):
    with open(ROOT / "configs" / name) as fh:
        return bench.parse_config(fh.read())


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    out = str(OUT)
    cfg = load("hvac_benchmark.cfg")

    print("== window sweep (k = 2..12 at kappa = 2)")
    bench.run_sweep(cfg, "k", list(range(2, 13)), out_dir=out)
    print("== radius sweep (kappa = 0..4 at k = 11)")
    bench.run_sweep(cfg, "kappa", list(range(0, 5)), out_dir=out)
    print("== trajectory-gap decay (kappa = 0..6)")
    bench.run_decay(cfg, "trajectory", out_dir=out, kappa_range=list(range(0, 7)))
    print("== saddle-inverse spatial decay")
    bench.run_decay(cfg, "kkt", out_dir=out)
    print("== centre-node truncation-gap decay")
    bench.run_decay(cfg, "truncation", out_dir=out, kappa_range=list(range(0, 9)))
    print("== forecast-error study")
    bench.run_experiment(load("uncertainty.cfg"), out_dir=out)
    print(f"done; outputs in {OUT}")


if __name__ == "__main__":
    main()
