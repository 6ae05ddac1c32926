"""Nullclines and a fan of reduced-system trajectories in the (p, y) plane."""

import argparse
from pathlib import Path

import numpy as np

from iffl.equilibria import equilibria, nullclines
from iffl.io import write_nullclines, write_trajectory
from iffl.model import ModelParams, ReducedState
from iffl.ode import IntegratorConfig, integrate

PRESETS = {
    "linear": ModelParams(a=1, b=1, c=1, delta=1, kappa=2, lam=1),
    "four-band": ModelParams(a=0.8, b=1, c=0.1, delta=1, n=2, V=1.95, K=1, kappa=20, lam=25),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("preset", choices=PRESETS)
    ap.add_argument("--out", type=Path, default=Path("out/phase"))
    ap.add_argument("--starts", type=int, default=8)
    args = ap.parse_args()
    params = PRESETS[args.preset]
    out = args.out / args.preset
    out.mkdir(parents=True, exist_ok=True)
    write_nullclines(out / "nullclines.csv", nullclines(params))
    for r in equilibria(params):
        print(f"equilibrium p={r.p_bar:.6f} y={r.y_bar:.6f} mu={r.mu:+.6f} {r.stability.value} {r.outcome.value}")
    rng = np.random.default_rng(0)
    for k, (p0, y0) in enumerate(rng.uniform(0.05, 2.0, size=(args.starts, 2))):
        traj = integrate(params, ReducedState(p0, y0), None, IntegratorConfig(t_end=50))
        write_trajectory(out / f"orbit_{k}.csv", traj)
        print(f"start ({p0:.3f}, {y0:.3f}) -> ({traj.final.p:.6f}, {traj.final.y:.6f})")


if __name__ == "__main__":
    main()
