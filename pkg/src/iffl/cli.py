"""Command-line entry point: ``iffl <experiment> --config FILE [--out DIR] [--format csv|jsonl]``.

Exit status is 0 on success, 1 for invalid input (bad config, unsupported
combination, unwritable output) and 2 when the numerics fail.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from iffl import __version__
from iffl.config import EXPERIMENTS, FORMATS, ExperimentConfig, parse_config, serialize_config
from iffl.equilibria import (
    equilibria,
    estimate_p_y_limits,
    nullclines,
    open_loop_output_limit,
    switch_lambdas,
    uniqueness_condition,
)
from iffl.errors import ConfigError, IFFLError, NumericalError
from iffl.inputs import Constant, Exponential, InputSignal, Linear, Step
from iffl.io import (
    band_records,
    json_line,
    sha256_file,
    write_cells,
    write_heatmap,
    write_jsonl,
    write_nullclines,
    write_trajectory,
)
from iffl.model import FullState, ReducedState
from iffl.ode import integrate, preadapted_state, simulate_step_response
from iffl.sweep import PREADAPTED, Method, SweepSpec, heatmap, lambda_sweep

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def asymptotic_input_rate(signal: InputSignal) -> float | None:
    """lim v(t) for inputs where it exists in closed form."""
    if isinstance(signal, (Constant, Linear, Step)):
        return 0.0
    if isinstance(signal, Exponential):
        return signal.mu
    return None


def _initial_state(cfg: ExperimentConfig) -> FullState | ReducedState:
    init = cfg.initial
    if init.system == "reduced":
        if cfg.input is not None:
            raise ConfigError("the reduced system runs closed-loop only; drop the input section", key="initial.system")
        return ReducedState(init.p, init.y)
    u0 = math.exp(cfg.input.log_value(cfg.run.t_start)) if cfg.input is not None else init.u
    if init.preadapted:
        return preadapted_state(cfg.model, u0)
    return FullState(init.x, init.y, math.log(u0))


def _sweep_spec(cfg: ExperimentConfig) -> SweepSpec:
    s = cfg.sweep
    init = PREADAPTED if cfg.initial.preadapted else FullState(cfg.initial.x, cfg.initial.y, math.log(cfg.initial.u))
    return SweepSpec(s.axis1, s.axis2, s.method, init, cfg.run, s.slope_tol, s.refine, s.refine_tol, s.workers)


def _ext(cfg: ExperimentConfig) -> str:
    return cfg.output.format


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Run one experiment and write its files plus ``manifest.jsonl``; returns the written paths."""
    out = Path(cfg.output.dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory '{out}': {exc}", key="output.dir") from None
    fmt = _ext(cfg)
    written: list[Path] = []

    def path(stem: str, ext: str | None = None) -> Path:
        p = out / f"{stem}.{ext or fmt}"
        written.append(p)
        return p

    params = cfg.model
    kind = cfg.experiment
    if kind in ("simulate", "limits"):
        traj = integrate(params, _initial_state(cfg), cfg.input, cfg.run)
        write_trajectory(path("trajectory"), traj, fmt)
        if kind == "limits":
            est = dataclasses.asdict(estimate_p_y_limits(traj))
            rate = asymptotic_input_rate(cfg.input)
            est["input_rate"] = rate
            est["y_limit_predicted"] = (
                open_loop_output_limit(params, rate) if rate is not None and not params.autocatalysis else None
            )
            write_jsonl(path("limits", "jsonl"), [est])
    elif kind == "step":
        st = cfg.step
        traj, summary = simulate_step_response(params, st.u_minus, st.u_plus, st.preadapt, cfg.run)
        write_trajectory(path("trajectory"), traj, fmt)
        write_jsonl(path("step", "jsonl"), [{"u_minus": st.u_minus, "u_plus": st.u_plus, **dataclasses.asdict(summary)}])
    elif kind in ("equilibria", "phase"):
        reports = equilibria(params)
        write_jsonl(path("equilibria", "jsonl"), [r.to_dict() for r in reports])
        if kind == "phase":
            write_nullclines(path("nullclines"), nullclines(params, cfg.phase.samples, cfg.phase.p_max), fmt)
        else:
            uniq = dataclasses.asdict(uniqueness_condition(params))
            write_jsonl(path("analysis", "jsonl"), [{"uniqueness": uniq, "switch_lambdas": switch_lambdas(params)}])
    elif kind == "sweep":
        spec = _sweep_spec(cfg)
        result = lambda_sweep(params, spec)
        reports = result if isinstance(result, dict) else {spec.method.value: result}
        records = [rec for method, rep in reports.items() for rec in band_records(rep, method)]
        write_jsonl(path("bands", "jsonl"), records)
        # per-point samples of the primary method
        primary = reports.get(Method.SIMULATION.value) or next(iter(reports.values()))
        axis = spec.axis1
        comments = [f"axis1 {axis.name} ({axis.count}): " + " ".join(format(float(v), ".17g") for v in axis.grid())]
        write_cells(path("grid"), primary.samples, (axis.name,), comments, fmt)
    elif kind == "heatmap":
        write_heatmap(path("grid"), heatmap(params, _sweep_spec(cfg)), fmt)
    else:  # parse_config already rejects this
        raise ConfigError(f"unknown experiment '{kind}'")

    text = serialize_config(cfg)
    manifest = out / "manifest.jsonl"
    lines = [json_line({"record": "run", "software": "iffl", "version": __version__, "experiment": kind,
                        "config_text": text})]
    lines += [json_line({"record": "output", "file": p.name, "sha256": sha256_file(p)}) for p in written]
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(manifest)
    return written


def load_config_text(path: Path) -> str:
    """Config text from a config file or from a previous run's ``manifest.jsonl``."""
    text = path.read_text(encoding="utf-8")
    first = text.lstrip()
    if first.startswith("{"):
        try:
            record = json.loads(first.splitlines()[0])
        except json.JSONDecodeError as exc:
            raise ConfigError(f"unreadable manifest: {exc}", 1) from None
        if "config_text" not in record:
            raise ConfigError("manifest has no config_text", 1)
        return record["config_text"]
    return text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are validation errors; 2 is reserved for numerical failure
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="iffl", description="Simulate and analyse incoherent feedforward loop models.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, type=Path, help="config file or a manifest.jsonl to rerun")
    ap.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    ap.add_argument("--format", choices=FORMATS, help="table format (overrides output.format)")
    ap.add_argument("--seed", default="n/a", help="accepted for interface compatibility; runs are deterministic")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = load_config_text(args.config)
        cfg = parse_config(text, args.experiment)
        output = cfg.output
        if args.out is not None:
            output = dataclasses.replace(output, dir=str(args.out))
        if args.format is not None:
            output = dataclasses.replace(output, format=args.format)
        cfg = dataclasses.replace(cfg, output=output)
        files = run_experiment(cfg)
    except NumericalError as exc:
        print(f"iffl: numerical failure in {args.experiment}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (IFFLError, ValueError, OSError) as exc:
        print(f"iffl: {args.experiment}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
