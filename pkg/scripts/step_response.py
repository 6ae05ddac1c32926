"""Fold-change step responses with and without autocatalytic feedback."""

import argparse
from pathlib import Path

from iffl.io import write_trajectory
from iffl.model import ModelParams
from iffl.ode import simulate_step_response


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/step"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    base = ModelParams(a=1, b=1, c=1, delta=3, n=2, V=10, K=2)
    for label, params in (("feedback", base), ("linear", base.with_(V=0))):
        for u_minus, u_plus in ((1, 2), (2, 4), (1, 1.5)):
            traj, s = simulate_step_response(params, u_minus, u_plus)
            write_trajectory(args.out / f"{label}_{u_minus:g}_to_{u_plus:g}.csv", traj)
            print(f"{label:8s} {u_minus:g} -> {u_plus:g}: q0 {s.q0:.4f}  peak {s.q_peak:.4f}  "
                  f"y {s.y0:.4f} -> {s.y_final:.4f}")


if __name__ == "__main__":
    main()
