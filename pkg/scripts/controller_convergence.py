#!/usr/bin/env python3
"""Closed-loop strength-controller runs against synthetic discriminators.

For each target value, simulates a discriminator whose training-set sign rate
falls linearly with p, so the loop has a known fixed point, and records the
trajectory.  Writes one CSV per target into --out-dir.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from adaaug.controller import ControllerState, OverfitStats, simulate


def make_model(seed: int, slope: float = 1.0, intercept: float = 0.9):
    gen = np.random.default_rng(seed)

    def d_model(p, step):
        rt = np.clip(intercept - slope * p, -1.0, 1.0)
        d = np.where(gen.random(64) < (1 + rt) / 2, 1.0, -1.0)
        return OverfitStats(d_train=list(d), d_generated=[-1.0] * 64)

    return d_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--targets", default="0.4,0.5,0.6,0.7")
    ap.add_argument("--steps", type=int, default=16000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="controller_runs")
    args = ap.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for target in (float(t) for t in args.targets.split(",")):
        state = ControllerState(target=target)
        final, traj = simulate(state, make_model(args.seed), steps=args.steps)
        p_star = (0.9 - target)  # fixed point of the synthetic model
        path = out_dir / f"target_{target:.2f}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["minibatch", "p", "heuristic"])
            writer.writerows(traj)
        print(f"target {target:.2f}: final p = {final.p:.4f} "
              f"(fixed point {p_star:.2f}) -> {path}")


if __name__ == "__main__":
    main()
