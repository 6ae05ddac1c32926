"""Experiment configuration in a line-oriented ``section.key = value`` format.

Example::

    # four-band autocatalytic parameter set
    model.a = 0.8
    model.b = 1
    model.c = 0.1
    model.lambda = 25
    run.t_end = 200

Blank lines and ``#`` comments are ignored. Unknown sections or keys are
rejected so that typos fail loudly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any

from iffl.errors import ConfigError, IFFLError
from iffl.inputs import Constant, Exponential, InputSignal, Linear, Oscillating, Sampled, Step
from iffl.model import ModelParams, Variant
from iffl.ode import IntegratorConfig
from iffl.sweep import Axis, Method

EXPERIMENTS = ("simulate", "step", "equilibria", "limits", "sweep", "heatmap", "phase")
FORMATS = ("csv", "jsonl")

_DEFAULT_T_END = {"sweep": 200.0, "heatmap": 200.0, "step": 50.0}

_MODEL_KEYS = {"a": "a", "b": "b", "c": "c", "delta": "delta", "kappa": "kappa", "lambda": "lam",
               "V": "V", "K": "K", "n": "n", "variant": "variant"}
_POSITIVE = ("a", "b", "c", "delta", "kappa", "K")

_INPUT_KINDS: dict[str, tuple[type, tuple[str, ...]]] = {
    "constant": (Constant, ("alpha",)),
    "linear": (Linear, ("alpha", "beta")),
    "exponential": (Exponential, ("beta", "mu")),
    "step": (Step, ("u_minus", "u_plus", "t_step")),
    "oscillating": (Oscillating, ("alpha", "amplitude", "omega")),
    "sampled": (Sampled, ("table",)),
}
_INPUT_NAMES = {cls: name for name, (cls, _) in _INPUT_KINDS.items()}

_RUN_KEYS = ("t_end", "t_start", "rel_tol", "abs_tol", "max_step", "steady_window", "steady_tol",
             "stop_on_steady", "output_times", "n_output", "max_steps")


@dataclass(frozen=True)
class InitialSection:
    """Initial state: full (x, y, u) or reduced (p, y); ``preadapted`` overrides x, y."""

    system: str = "full"
    x: float = 1.0
    y: float = 1.0
    u: float = 1.0
    p: float = 1.0
    preadapted: bool = False


@dataclass(frozen=True)
class StepSection:
    u_minus: float = 1.0
    u_plus: float = 2.0
    preadapt: bool = True


@dataclass(frozen=True)
class SweepSection:
    axis1: Axis
    axis2: Axis | None = None
    method: Method = Method.ALGEBRAIC
    refine: bool = True
    refine_tol: float | None = None
    slope_tol: float = 1e-4
    workers: int = 1


@dataclass(frozen=True)
class PhaseSection:
    samples: int = 512
    p_max: float | None = None


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    format: str = "csv"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: ModelParams
    run: IntegratorConfig
    input: InputSignal | None = None
    initial: InitialSection = field(default_factory=InitialSection)
    step: StepSection | None = None
    sweep: SweepSection | None = None
    phase: PhaseSection = field(default_factory=PhaseSection)
    output: OutputSection = field(default_factory=OutputSection)


@dataclass
class _Entry:
    value: str
    line: int


def _float(entry: _Entry, key: str) -> float:
    try:
        value = float(entry.value)
    except ValueError:
        raise ConfigError(f"expected a number, got '{entry.value}'", entry.line, key) from None
    if not math.isfinite(value):
        raise ConfigError("value must be finite", entry.line, key)
    return value


def _int(entry: _Entry, key: str) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise ConfigError(f"expected an integer, got '{entry.value}'", entry.line, key) from None


def _bool(entry: _Entry, key: str) -> bool:
    v = entry.value.lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected true/false, got '{entry.value}'", entry.line, key)


def _floats(entry: _Entry, key: str) -> tuple[float, ...]:
    parts = [s.strip() for s in entry.value.split(",") if s.strip()]
    return tuple(_float(_Entry(s, entry.line), key) for s in parts)


def _optional_float(entry: _Entry, key: str) -> float | None:
    return None if entry.value.lower() == "none" else _float(entry, key)


def _tokenize(text: str) -> dict[str, dict[str, _Entry]]:
    sections: dict[str, dict[str, _Entry]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got '{raw.strip()}'", lineno)
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        if "." not in lhs:
            raise ConfigError("key must be qualified as section.key", lineno, lhs)
        section, key = lhs.split(".", 1)
        value = rhs.strip().strip('"').strip("'")
        bucket = sections.setdefault(section, {})
        if key in bucket:
            raise ConfigError("duplicate key", lineno, lhs)
        bucket[key] = _Entry(value, lineno)
    return sections


def _check_keys(section: str, entries: dict[str, _Entry], allowed) -> None:
    for key, entry in entries.items():
        if key not in allowed:
            raise ConfigError(f"unknown key in section '{section}'", entry.line, f"{section}.{key}")


def _first_line(entries: dict[str, _Entry]) -> int | None:
    return min((e.line for e in entries.values()), default=None)


def _parse_model(entries: dict[str, _Entry]) -> ModelParams:
    _check_keys("model", entries, _MODEL_KEYS)
    kwargs: dict[str, Any] = {}
    for key, entry in entries.items():
        if key == "variant":
            try:
                kwargs["variant"] = Variant(entry.value.lower())
            except ValueError:
                raise ConfigError(f"variant must be one of {[v.value for v in Variant]}", entry.line, "model.variant") from None
            continue
        value = _float(entry, f"model.{key}")
        if key in _POSITIVE and value <= 0:
            raise ConfigError(f"rate constant must be positive (got {value})", entry.line, f"model.{key}")
        if key == "V" and value < 0:
            raise ConfigError(f"V must be non-negative (got {value})", entry.line, "model.V")
        kwargs[_MODEL_KEYS[key]] = value
    try:
        return ModelParams(**kwargs)
    except IFFLError as exc:
        raise ConfigError(str(exc), _first_line(entries), "model") from None


def _parse_input(entries: dict[str, _Entry]) -> InputSignal:
    if "kind" not in entries:
        raise ConfigError("input section needs input.kind", _first_line(entries), "input.kind")
    kind = entries["kind"].value.lower()
    if kind not in _INPUT_KINDS:
        raise ConfigError(f"unknown input kind '{kind}'", entries["kind"].line, "input.kind")
    cls, keys = _INPUT_KINDS[kind]
    _check_keys("input", entries, ("kind", *keys))
    kwargs: dict[str, Any] = {}
    for key in keys:
        if key not in entries:
            continue
        entry = entries[key]
        if key == "table":
            pairs = []
            for item in entry.value.split(","):
                if not item.strip():
                    continue
                if ":" not in item:
                    raise ConfigError("table entries must be t:u", entry.line, "input.table")
                t, u = item.split(":", 1)
                pairs.append((_float(_Entry(t, entry.line), "input.table"), _float(_Entry(u, entry.line), "input.table")))
            kwargs["table"] = tuple(pairs)
        else:
            kwargs[key] = _float(entry, f"input.{key}")
    try:
        return cls(**kwargs)
    except (IFFLError, TypeError) as exc:
        raise ConfigError(f"invalid {kind} input: {exc}", _first_line(entries), "input") from None


def _parse_run(entries: dict[str, _Entry], experiment: str) -> IntegratorConfig:
    _check_keys("run", entries, _RUN_KEYS)
    kwargs: dict[str, Any] = {"t_end": _DEFAULT_T_END.get(experiment, 100.0)}
    n_output = None
    for key, entry in entries.items():
        name = f"run.{key}"
        if key == "stop_on_steady":
            kwargs[key] = _bool(entry, name)
        elif key == "output_times":
            kwargs[key] = _floats(entry, name) or None
        elif key == "n_output":
            n_output = _int(entry, name)
        elif key == "max_steps":
            kwargs[key] = _int(entry, name)
        elif key in ("max_step", "steady_window"):
            kwargs[key] = _optional_float(entry, name)
        else:
            kwargs[key] = _float(entry, name)
    if n_output is not None:
        if "output_times" in kwargs:
            raise ConfigError("give either run.output_times or run.n_output", entries["n_output"].line, "run.n_output")
        if n_output < 2:
            raise ConfigError("n_output must be at least 2", entries["n_output"].line, "run.n_output")
        t0, t1 = kwargs.get("t_start", 0.0), kwargs["t_end"]
        kwargs["output_times"] = tuple(t0 + (t1 - t0) * i / (n_output - 1) for i in range(n_output))
    try:
        return IntegratorConfig(**kwargs)
    except IFFLError as exc:
        raise ConfigError(str(exc), _first_line(entries), "run") from None


def _parse_initial(entries: dict[str, _Entry]) -> InitialSection:
    _check_keys("initial", entries, ("system", "x", "y", "u", "p", "preadapted"))
    kwargs: dict[str, Any] = {}
    for key, entry in entries.items():
        if key == "system":
            if entry.value not in ("full", "reduced"):
                raise ConfigError("system must be 'full' or 'reduced'", entry.line, "initial.system")
            kwargs[key] = entry.value
        elif key == "preadapted":
            kwargs[key] = _bool(entry, "initial.preadapted")
        else:
            value = _float(entry, f"initial.{key}")
            if value <= 0:
                raise ConfigError("initial values must be positive", entry.line, f"initial.{key}")
            kwargs[key] = value
    return InitialSection(**kwargs)


def _parse_step(entries: dict[str, _Entry]) -> StepSection:
    _check_keys("step", entries, ("u_minus", "u_plus", "preadapt"))
    kwargs: dict[str, Any] = {}
    for key, entry in entries.items():
        if key == "preadapt":
            kwargs[key] = _bool(entry, "step.preadapt")
        else:
            value = _float(entry, f"step.{key}")
            if value <= 0:
                raise ConfigError("step levels must be positive", entry.line, f"step.{key}")
            kwargs[key] = value
    return StepSection(**kwargs)


def _parse_axis(prefix: str, entries: dict[str, _Entry]) -> Axis | None:
    if prefix not in entries:
        stray = [k for k in entries if k.startswith(prefix + "_")]
        if stray:
            raise ConfigError(f"sweep.{prefix} missing", entries[stray[0]].line, f"sweep.{stray[0]}")
        return None
    kwargs: dict[str, Any] = {"name": entries[prefix].value}
    for suffix, conv in (("min", _float), ("max", _float), ("count", _int)):
        key = f"{prefix}_{suffix}"
        if key in entries:
            kwargs[{"min": "lo", "max": "hi", "count": "count"}[suffix]] = conv(entries[key], f"sweep.{key}")
    if f"{prefix}_values" in entries:
        kwargs["values"] = _floats(entries[f"{prefix}_values"], f"sweep.{prefix}_values")
    try:
        return Axis(**kwargs)
    except IFFLError as exc:
        raise ConfigError(str(exc), entries[prefix].line, f"sweep.{prefix}") from None


def _parse_sweep(entries: dict[str, _Entry]) -> SweepSection:
    axis_keys = [f"{ax}{suffix}" for ax in ("axis1", "axis2") for suffix in ("", "_min", "_max", "_count", "_values")]
    _check_keys("sweep", entries, (*axis_keys, "method", "refine", "refine_tol", "slope_tol", "workers"))
    axis1 = _parse_axis("axis1", entries)
    if axis1 is None:
        raise ConfigError("sweep needs sweep.axis1", _first_line(entries), "sweep.axis1")
    kwargs: dict[str, Any] = {"axis1": axis1, "axis2": _parse_axis("axis2", entries)}
    for key, entry in entries.items():
        if key == "method":
            try:
                kwargs[key] = Method(entry.value.lower())
            except ValueError:
                raise ConfigError("method must be algebraic, simulation or both", entry.line, "sweep.method") from None
        elif key == "refine":
            kwargs[key] = _bool(entry, "sweep.refine")
        elif key == "refine_tol":
            kwargs[key] = _optional_float(entry, "sweep.refine_tol")
        elif key == "slope_tol":
            kwargs[key] = _float(entry, "sweep.slope_tol")
        elif key == "workers":
            kwargs[key] = _int(entry, "sweep.workers")
    return SweepSection(**kwargs)


def _parse_phase(entries: dict[str, _Entry]) -> PhaseSection:
    _check_keys("phase", entries, ("samples", "p_max"))
    kwargs: dict[str, Any] = {}
    if "samples" in entries:
        kwargs["samples"] = _int(entries["samples"], "phase.samples")
        if kwargs["samples"] < 2:
            raise ConfigError("need at least 2 samples", entries["samples"].line, "phase.samples")
    if "p_max" in entries:
        kwargs["p_max"] = _optional_float(entries["p_max"], "phase.p_max")
    return PhaseSection(**kwargs)


def _parse_output(entries: dict[str, _Entry]) -> OutputSection:
    _check_keys("output", entries, ("dir", "format"))
    kwargs: dict[str, Any] = {}
    if "dir" in entries:
        kwargs["dir"] = entries["dir"].value
    if "format" in entries:
        fmt = entries["format"].value.lower()
        if fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}", entries["format"].line, "output.format")
        kwargs["format"] = fmt
    return OutputSection(**kwargs)


_SECTIONS = ("model", "input", "run", "initial", "step", "sweep", "phase", "output", "experiment")


def parse_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    """Parse and validate configuration text; ``experiment`` overrides ``experiment.kind``."""
    sections = _tokenize(text)
    for name, entries in sections.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section '{name}'", _first_line(entries), name)
    exp_entries = sections.get("experiment", {})
    _check_keys("experiment", exp_entries, ("kind",))
    declared = exp_entries["kind"].value if "kind" in exp_entries else None
    if experiment and declared and declared != experiment:
        raise ConfigError(f"config declares '{declared}' but '{experiment}' was requested",
                          exp_entries["kind"].line, "experiment.kind")
    kind = experiment or declared
    if kind is None:
        raise ConfigError("no experiment given (CLI argument or experiment.kind)", key="experiment.kind")
    if kind not in EXPERIMENTS:
        line = exp_entries["kind"].line if "kind" in exp_entries and not experiment else None
        raise ConfigError(f"unknown experiment '{kind}'; expected one of {EXPERIMENTS}", line, "experiment.kind")
    if "model" not in sections:
        raise ConfigError("missing section 'model'", key="model")

    model = _parse_model(sections["model"])
    run = _parse_run(sections.get("run", {}), kind)
    signal = _parse_input(sections["input"]) if "input" in sections else None
    initial = _parse_initial(sections.get("initial", {}))
    step = _parse_step(sections["step"]) if "step" in sections else None
    sweep = _parse_sweep(sections["sweep"]) if "sweep" in sections else None
    phase = _parse_phase(sections.get("phase", {}))
    output = _parse_output(sections.get("output", {}))

    if kind == "step" and step is None:
        raise ConfigError("step experiment needs a 'step' section", key="step")
    if kind == "limits" and signal is None:
        raise ConfigError("limits experiment needs an 'input' section", key="input")
    if kind in ("sweep", "heatmap") and sweep is None:
        raise ConfigError(f"{kind} experiment needs a 'sweep' section", key="sweep")
    if kind == "heatmap" and sweep.axis2 is None:
        raise ConfigError("heatmap needs sweep.axis2", key="sweep.axis2")
    if kind == "sweep" and sweep.axis1.field != "lam":
        raise ConfigError("sweep experiment scans lambda; set sweep.axis1 = lambda", key="sweep.axis1")
    if signal is not None and kind not in ("simulate", "limits"):
        raise ConfigError(f"an input signal has no meaning for the {kind} experiment", key="input")
    if kind == "step" and signal is not None:
        raise ConfigError("step experiment builds its own input", key="input")

    return ExperimentConfig(kind, model, run, signal, initial, step, sweep, phase, output)


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "none"
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Emit every resolved setting; ``parse_config`` of the result reproduces ``cfg``."""
    lines = [f"experiment.kind = {cfg.experiment}"]
    inverse = {v: k for k, v in _MODEL_KEYS.items()}
    for f in fields(ModelParams):
        value = getattr(cfg.model, f.name)
        lines.append(f"model.{inverse[f.name]} = {value.value if f.name == 'variant' else _fmt(float(value))}")
    if cfg.input is not None:
        name = _INPUT_NAMES[type(cfg.input)]
        lines.append(f"input.kind = {name}")
        for key in _INPUT_KINDS[name][1]:
            value = getattr(cfg.input, key)
            if key == "table":
                lines.append("input.table = " + ", ".join(f"{_fmt(t)}:{_fmt(u)}" for t, u in value))
            else:
                lines.append(f"input.{key} = {_fmt(float(value))}")
    run = cfg.run
    for key in ("t_end", "t_start", "rel_tol", "abs_tol", "max_step", "steady_window", "steady_tol", "stop_on_steady", "max_steps"):
        value = getattr(run, key)
        if key != "max_steps" and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        lines.append(f"run.{key} = {_fmt(value)}")
    if run.output_times is not None:
        lines.append("run.output_times = " + ", ".join(_fmt(t) for t in run.output_times))
    for f in fields(InitialSection):
        lines.append(f"initial.{f.name} = {_fmt(getattr(cfg.initial, f.name))}")
    if cfg.step is not None:
        for f in fields(StepSection):
            lines.append(f"step.{f.name} = {_fmt(getattr(cfg.step, f.name))}")
    if cfg.sweep is not None:
        for prefix in ("axis1", "axis2"):
            axis = getattr(cfg.sweep, prefix)
            if axis is None:
                continue
            lines.append(f"sweep.{prefix} = {axis.name}")
            if axis.values is not None:
                lines.append(f"sweep.{prefix}_values = " + ", ".join(_fmt(v) for v in axis.values))
            else:
                lines += [f"sweep.{prefix}_min = {_fmt(float(axis.lo))}", f"sweep.{prefix}_max = {_fmt(float(axis.hi))}",
                          f"sweep.{prefix}_count = {axis.count}"]
        lines += [f"sweep.method = {cfg.sweep.method.value}", f"sweep.refine = {_fmt(cfg.sweep.refine)}",
                  f"sweep.refine_tol = {_fmt(cfg.sweep.refine_tol)}", f"sweep.slope_tol = {_fmt(cfg.sweep.slope_tol)}",
                  f"sweep.workers = {cfg.sweep.workers}"]
    lines += [f"phase.samples = {cfg.phase.samples}", f"phase.p_max = {_fmt(cfg.phase.p_max)}"]
    lines += [f"output.dir = {cfg.output.dir}", f"output.format = {cfg.output.format}"]
    return "\n".join(lines) + "\n"
