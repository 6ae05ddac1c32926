"""Parameter sweeps: outcome bands along lambda and two-parameter mu heatmaps.

Every cell is an independent pure computation, so sweeps can be farmed out to
worker processes; results are collected in input order and do not depend on
the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from iffl.equilibria import equilibria, switch_lambdas
from iffl.errors import IFFLError, ParameterError
from iffl.model import FullState, ModelParams
from iffl.ode import IntegratorConfig, Outcome, Terminal, integrate, outcome_from_rate, preadapted_state, w_slope

INDETERMINATE = "Indeterminate"
PREADAPTED = "preadapted"

_PARAM_ALIASES = {"lambda": "lam"}
_SWEEPABLE = {f.name for f in fields(ModelParams)} - {"variant"}


class Method(str, Enum):
    ALGEBRAIC = "algebraic"
    SIMULATION = "simulation"
    BOTH = "both"


def param_field(name: str) -> str:
    resolved = _PARAM_ALIASES.get(name, name)
    if resolved not in _SWEEPABLE:
        raise ParameterError(f"'{name}' is not a sweepable model parameter")
    return resolved


@dataclass(frozen=True)
class Axis:
    """Sweep axis: ``count`` evenly spaced points on [lo, hi], or explicit ``values``."""

    name: str
    lo: float = 0.0
    hi: float = 1.0
    count: int = 2
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        param_field(self.name)
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if len(vals) < 1 or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ParameterError(f"axis {self.name}: values must be non-empty and increasing")
            object.__setattr__(self, "values", vals)
            object.__setattr__(self, "lo", vals[0])
            object.__setattr__(self, "hi", vals[-1])
            object.__setattr__(self, "count", len(vals))
        elif self.count < 1 or (self.count >= 2 and not self.lo < self.hi):
            raise ParameterError(f"axis {self.name}: need count >= 2 and lo < hi")

    @property
    def field(self) -> str:
        return param_field(self.name)

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values)
        if self.count == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Axis | None = None
    method: Method = Method.ALGEBRAIC
    initial_state: FullState | str = FullState(1.0, 1.0, 0.0)
    integrator: IntegratorConfig = field(default_factory=lambda: IntegratorConfig(t_end=200.0))
    slope_tol: float = 1e-4
    refine: bool = True
    refine_tol: float | None = None  # None: (hi - lo) / 1e4
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if isinstance(self.initial_state, str) and self.initial_state != PREADAPTED:
            raise ParameterError(f"initial_state must be a FullState or '{PREADAPTED}'")

    def initial_for(self, params: ModelParams) -> FullState:
        if isinstance(self.initial_state, str):
            return preadapted_state(params)
        return self.initial_state


@dataclass(frozen=True)
class CellResult:
    values: tuple[float, ...]
    mu_all: tuple[float, ...] = ()
    mu_algebraic: float | None = None  # set only when the interior root is unique
    mu_simulated: float | None = None
    label: str = INDETERMINATE
    flag: str | None = None


@dataclass(frozen=True)
class BandReport:
    boundaries: tuple[float, ...]
    labels: tuple[str, ...]
    methods: tuple[str, ...]
    samples: tuple[CellResult, ...] = ()

    def __post_init__(self):
        if len(self.labels) != len(self.boundaries) + 1:
            raise ValueError("a band report needs one more label than boundaries")


def _simulate(params: ModelParams, spec: SweepSpec) -> tuple[float | None, str, str | None]:
    try:
        traj = integrate(params, spec.initial_for(params), None, spec.integrator)
    except IFFLError as exc:
        return None, INDETERMINATE, f"simulation failed: {exc}"
    if traj.meta.terminal is Terminal.DIVERGED:
        return None, INDETERMINATE, "diverged"
    slope = w_slope(traj)
    flag = None if traj.meta.terminal is Terminal.STEADY else "not steady at t_end"
    return slope, outcome_from_rate(slope, spec.slope_tol).value, flag


def evaluate_cell(params: ModelParams, values: tuple[float, ...], spec: SweepSpec) -> CellResult:
    """Algebraic and/or simulated growth rate of u for one parameter set."""
    mu_all: tuple[float, ...] = ()
    mu_alg = mu_sim = None
    label, flag = INDETERMINATE, None
    want_alg = spec.method in (Method.ALGEBRAIC, Method.BOTH)
    want_sim = spec.method in (Method.SIMULATION, Method.BOTH)
    if want_alg:
        try:
            reports = equilibria(params)
        except IFFLError as exc:
            reports, flag = [], f"equilibria failed: {exc}"
        mu_all = tuple(r.mu for r in reports)
        if len(reports) == 1:
            mu_alg = reports[0].mu
            label = reports[0].outcome.value
        elif len(reports) > 1:
            # several equilibria: the simulation decides which one is reached
            want_sim = True
        elif flag is None:
            flag = "no interior equilibrium"
    if want_sim:
        mu_sim, sim_label, sim_flag = _simulate(params, spec)
        if mu_alg is None or spec.method is Method.SIMULATION:
            label = sim_label
        elif sim_label not in (label, INDETERMINATE):
            flag = f"algebraic {label} vs simulated {sim_label}"
        flag = flag or sim_flag
    return CellResult(values, mu_all, mu_alg, mu_sim, label, flag)


def _cell_task(args):
    params, values, spec = args
    return evaluate_cell(params, values, spec)


def _map_cells(tasks: list, workers: int) -> list[CellResult]:
    if workers <= 1 or len(tasks) <= 1:
        return [_cell_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_cell_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _collapse(points: Sequence[tuple[float, str]], boundary_at: Callable[[int, int], float], method: str) -> BandReport:
    """Turn an ordered run of (lambda, label) samples into bands."""
    usable = [(i, lam, lab) for i, (lam, lab) in enumerate(points) if lab != INDETERMINATE]
    if not usable:
        return BandReport((), (INDETERMINATE,), ())
    boundaries, labels = [], [usable[0][2]]
    for (i0, _, lab0), (i1, _, lab1) in zip(usable, usable[1:]):
        if lab1 != lab0:
            boundaries.append(boundary_at(i0, i1))
            labels.append(lab1)
    return BandReport(tuple(boundaries), tuple(labels), tuple(method for _ in boundaries))


def _lambda_sweep_algebraic(params: ModelParams, spec: SweepSpec) -> BandReport:
    lo, hi = spec.axis1.lo, spec.axis1.hi
    cuts = [lam for lam in switch_lambdas(params, (lo, hi)) if lo < lam < hi]
    edges = [lo, *cuts, hi]
    mids = [0.5 * (e0 + e1) for e0, e1 in zip(edges, edges[1:])]
    cell_spec = SweepSpec(spec.axis1, method=Method.ALGEBRAIC, initial_state=spec.initial_state,
                          integrator=spec.integrator, slope_tol=spec.slope_tol)
    tasks = [(params.with_(lam=m), (m,), cell_spec) for m in mids]
    mid_cells = _map_cells(tasks, spec.workers)
    points = [(c.values[0], c.label) for c in mid_cells]
    report = _collapse(points, lambda i0, i1: edges[i1], Method.ALGEBRAIC.value)
    grid_tasks = [(params.with_(lam=float(v)), (float(v),), cell_spec) for v in spec.axis1.grid()]
    samples = tuple(_map_cells(grid_tasks, spec.workers))
    return BandReport(report.boundaries, report.labels, report.methods, samples)


def _lambda_sweep_simulation(params: ModelParams, spec: SweepSpec) -> BandReport:
    sim_spec = SweepSpec(spec.axis1, method=Method.SIMULATION, initial_state=spec.initial_state,
                         integrator=spec.integrator, slope_tol=spec.slope_tol)
    grid = [float(v) for v in spec.axis1.grid()]
    cells = _map_cells([(params.with_(lam=v), (v,), sim_spec) for v in grid], spec.workers)
    points = [(v, c.label) for v, c in zip(grid, cells)]
    tol = spec.refine_tol if spec.refine_tol is not None else (spec.axis1.hi - spec.axis1.lo) / 1e4

    def boundary_at(i0: int, i1: int) -> float:
        lo, hi = grid[i0], grid[i1]
        if not spec.refine:
            return 0.5 * (lo + hi)
        lab_lo, lab_hi = cells[i0].label, cells[i1].label
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            lab = evaluate_cell(params.with_(lam=mid), (mid,), sim_spec).label
            if lab == lab_lo:
                lo = mid
            elif lab == lab_hi:
                hi = mid
            else:
                break
        return 0.5 * (lo + hi)

    report = _collapse(points, boundary_at, Method.SIMULATION.value)
    return BandReport(report.boundaries, report.labels, report.methods, tuple(cells))


def lambda_sweep(params: ModelParams, spec: SweepSpec) -> BandReport | dict[str, BandReport]:
    """Outcome bands along lambda. ``Method.BOTH`` returns both reports keyed by method."""
    if spec.axis1.field != "lam":
        raise ParameterError("lambda_sweep needs lambda as axis1")
    if spec.method is Method.ALGEBRAIC:
        return _lambda_sweep_algebraic(params, spec)
    if spec.method is Method.SIMULATION:
        return _lambda_sweep_simulation(params, spec)
    return {
        Method.ALGEBRAIC.value: _lambda_sweep_algebraic(params, spec),
        Method.SIMULATION.value: _lambda_sweep_simulation(params, spec),
    }


@dataclass(frozen=True)
class Heatmap:
    """Row-major grid: cell (i, j) sits at index i * len(axis2_values) + j."""

    axis1: str
    axis1_values: tuple[float, ...]
    axis2: str
    axis2_values: tuple[float, ...]
    cells: tuple[CellResult, ...]

    def cell(self, i: int, j: int) -> CellResult:
        return self.cells[i * len(self.axis2_values) + j]

    def mu_array(self) -> np.ndarray:
        """Unique-root algebraic mu, else simulated mu, else NaN."""
        out = np.full((len(self.axis1_values), len(self.axis2_values)), np.nan)
        for k, c in enumerate(self.cells):
            mu = c.mu_algebraic if c.mu_algebraic is not None else c.mu_simulated
            if mu is not None:
                out[divmod(k, len(self.axis2_values))] = mu
        return out


def _cell_params(params: ModelParams, names: tuple[str, ...], values: tuple[float, ...]) -> ModelParams | str:
    try:
        return params.with_(**{n: v for n, v in zip(names, values)})
    except ParameterError as exc:
        return str(exc)


def heatmap(params: ModelParams, spec: SweepSpec) -> Heatmap:
    if spec.axis2 is None:
        raise ParameterError("heatmap needs two axes")
    names = (spec.axis1.field, spec.axis2.field)
    g1 = [float(v) for v in spec.axis1.grid()]
    g2 = [float(v) for v in spec.axis2.grid()]
    tasks, invalid = [], {}
    for i, v1 in enumerate(g1):
        for j, v2 in enumerate(g2):
            cell_params = _cell_params(params, names, (v1, v2))
            if isinstance(cell_params, str):
                invalid[len(tasks)] = cell_params
                tasks.append(None)
            else:
                tasks.append((cell_params, (v1, v2), spec))
    valid = [t for t in tasks if t is not None]
    results = iter(_map_cells(valid, spec.workers))
    cells = []
    for k, task in enumerate(tasks):
        if task is None:
            v1, v2 = g1[k // len(g2)], g2[k % len(g2)]
            cells.append(CellResult((v1, v2), flag=f"invalid parameters: {invalid[k]}"))
        else:
            cells.append(next(results))
    return Heatmap(spec.axis1.name, tuple(g1), spec.axis2.name, tuple(g2), tuple(cells))


@dataclass(frozen=True)
class BandWidth:
    lo: float | None  # None: band extends below the sweep
    hi: float | None
    fold: float  # hi / lo, inf when unbounded
    label: str


def band_width_report(
    params: ModelParams,
    lambda_range: tuple[float, float],
    method: Method = Method.ALGEBRAIC,
    spec: SweepSpec | None = None,
) -> list[BandWidth]:
    """Fold widths lambda_hi / lambda_lo of the bands delimited by sign switches of mu."""
    lo, hi = lambda_range
    if spec is None:
        spec = SweepSpec(Axis("lambda", lo, hi, 61), method=method)
    else:
        spec = SweepSpec(Axis("lambda", lo, hi, spec.axis1.count), method=method, initial_state=spec.initial_state,
                         integrator=spec.integrator, slope_tol=spec.slope_tol, refine=spec.refine,
                         refine_tol=spec.refine_tol, workers=spec.workers)
    report = lambda_sweep(params, spec)
    if isinstance(report, dict):
        report = report[Method.SIMULATION.value]
    if not report.boundaries:
        return []
    edges: list[float | None] = [None, *report.boundaries, None]
    out = []
    for k, label in enumerate(report.labels):
        b_lo, b_hi = edges[k], edges[k + 1]
        fold = b_hi / b_lo if b_lo is not None and b_hi is not None and b_lo > 0 else math.inf
        out.append(BandWidth(b_lo, b_hi, fold, label))
    return out
