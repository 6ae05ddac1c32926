"""Fold widths lambda_hi / lambda_lo of each outcome band."""

import argparse

from iffl.model import ModelParams
from iffl.sweep import band_width_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=1.2)
    ap.add_argument("--lam-max", type=float, default=40.0)
    args = ap.parse_args()
    params = ModelParams(a=args.a, b=1, c=0.1, delta=1, n=2, V=2, K=1, kappa=20)
    for band in band_width_report(params, (1e-3, args.lam_max)):
        lo = "-inf" if band.lo is None else f"{band.lo:.4f}"
        hi = "inf" if band.hi is None else f"{band.hi:.4f}"
        print(f"{band.label:14s} [{lo}, {hi}]  fold {band.fold:.3f}")


if __name__ == "__main__":
    main()
