"""Outcome bands along lambda for the four-band and a = 0.1 / 1.2 parameter families.

Prints the algebraic switch points next to the simulated ones and writes
bands.jsonl into the output directory.
"""

import argparse
from pathlib import Path

from iffl.io import band_records, write_jsonl
from iffl.model import ModelParams
from iffl.ode import IntegratorConfig
from iffl.sweep import PREADAPTED, Axis, Method, SweepSpec, lambda_sweep

FAMILIES = {
    "four-band": (ModelParams(a=0.8, b=1, c=0.1, delta=1, n=2, V=1.95, K=1, kappa=20), "canonical"),
    "a=0.1": (ModelParams(a=0.1, b=1, c=0.1, delta=1, n=2, V=2, K=1, kappa=20), PREADAPTED),
    "a=1.2": (ModelParams(a=1.2, b=1, c=0.1, delta=1, n=2, V=2, K=1, kappa=20), PREADAPTED),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/bands"))
    ap.add_argument("--points", type=int, default=71)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    records = []
    for name, (params, start) in FAMILIES.items():
        kwargs = {} if start == "canonical" else {"initial_state": start}
        spec = SweepSpec(Axis("lambda", 0.05, 35, args.points), method=Method.BOTH, workers=args.workers,
                         integrator=IntegratorConfig(t_end=400), **kwargs)
        result = lambda_sweep(params, spec)
        for method, report in result.items():
            print(f"{name:10s} {method:10s} switches: {', '.join(f'{b:.4f}' for b in report.boundaries)}")
            print(f"{'':21s} labels:   {' -> '.join(report.labels)}")
            records += [{"family": name, **r} for r in band_records(report, method)]
    write_jsonl(args.out / "bands.jsonl", records)


if __name__ == "__main__":
    main()
