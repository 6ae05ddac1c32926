"""Equilibrium growth rate mu over a (kappa, lambda) grid, written as grid.csv."""

import argparse
from pathlib import Path

import numpy as np

from iffl.io import write_heatmap
from iffl.model import ModelParams
from iffl.sweep import Axis, Method, SweepSpec, heatmap


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/heatmap"))
    ap.add_argument("--kappa", type=int, default=26, help="number of kappa values on [5, 30]")
    ap.add_argument("--lam", type=int, default=61, help="number of lambda values on [0, 30]")
    ap.add_argument("--method", choices=[m.value for m in Method], default="algebraic")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    params = ModelParams(a=0.8, b=1, c=0.1, delta=1, n=2, V=1.95, K=1)
    spec = SweepSpec(Axis("kappa", 5, 30, args.kappa), Axis("lambda", 0, 30, args.lam),
                     method=Method(args.method), workers=args.workers)
    hm = heatmap(params, spec)
    args.out.mkdir(parents=True, exist_ok=True)
    write_heatmap(args.out / "grid.csv", hm)
    mu = hm.mu_array()
    for i, kappa in enumerate(hm.axis1_values):
        row = "".join("+" if m > 0 else "-" if m < 0 else "0" for m in mu[i])
        print(f"kappa {kappa:5.1f} {row}")
    print(f"mu range [{np.nanmin(mu):.3f}, {np.nanmax(mu):.3f}]")


if __name__ == "__main__":
    main()
