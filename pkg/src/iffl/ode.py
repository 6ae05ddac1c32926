"""Adaptive integration of the full and reduced systems.

The integrator is an explicit Dormand-Prince 5(4) pair with its fourth-order
continuous extension for dense output. The full system is advanced in the
coordinates (ln x, y, ln u): in elimination runs x and u shrink by tens of
orders of magnitude, and only log coordinates keep p = u/x meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from iffl.errors import (
    DomainError,
    NumericalError,
    ParameterError,
    StepBudgetError,
    StiffnessError,
    UnsupportedVariantError,
    WrongExperimentError,
)
from iffl.inputs import InputSignal, Step
from iffl.model import FullState, ModelParams, ReducedState, Variant, hill, hill_derivative
from iffl.roots import find_roots, scan_grid

DIVERGENCE_LIMIT = 1e12

# Dormand-Prince 5(4) tableau and dense-output polynomial coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class Terminal(str, Enum):
    REACHED_END = "reached_t_end"
    STEADY = "steady"
    DIVERGED = "diverged"


class Outcome(str, Enum):
    ELIMINATION = "Elimination"
    PROLIFERATION = "Proliferation"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float = 100.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float | None = None  # None: (t_end - t_start) / 200
    output_times: tuple[float, ...] | None = None
    steady_window: float | None = None  # None: min(10, 20% of the horizon)
    steady_tol: float = 1e-9
    stop_on_steady: bool = True
    t_start: float = 0.0
    max_steps: int = 1_000_000  # accepted + rejected steps per run

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ParameterError("tolerances must be positive")
        if not self.t_end > self.t_start:
            raise ParameterError("t_end must exceed t_start")
        if not self.t_end > 0:
            raise ParameterError("t_end must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ParameterError("max_step must be positive")
        if self.steady_window is not None and not 0 < self.steady_window < self.t_end - self.t_start:
            raise ParameterError("steady_window must be positive and shorter than the horizon")
        if self.max_steps < 1:
            raise ParameterError("max_steps must be positive")
        if self.output_times is not None:
            times = tuple(float(t) for t in self.output_times)
            if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
                raise ParameterError("output_times must be strictly increasing")
            object.__setattr__(self, "output_times", times)

    @property
    def horizon(self) -> float:
        return self.t_end - self.t_start

    @property
    def step_limit(self) -> float:
        return self.max_step if self.max_step is not None else self.horizon / 200.0

    @property
    def window(self) -> float:
        return self.steady_window if self.steady_window is not None else min(10.0, 0.2 * self.horizon)

    def with_(self, **changes) -> IntegratorConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class RunMeta:
    n_steps: int
    n_rejected: int
    n_rhs: int
    terminal: Terminal
    t_final: float
    window: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution.

    ``data`` columns are (ln x, y, w) for the full system and (p, y) for the
    reduced one. ``v`` is the log-derivative of u at each sample.
    """

    system: str
    times: np.ndarray
    data: np.ndarray
    v: np.ndarray
    params: ModelParams
    closed_loop: bool
    meta: RunMeta
    input: InputSignal | None = None

    def __len__(self) -> int:
        return len(self.times)

    @property
    def is_full(self) -> bool:
        return self.system == "full"

    @property
    def y(self) -> np.ndarray:
        return self.data[:, 1]

    @property
    def ln_x(self) -> np.ndarray | None:
        return self.data[:, 0] if self.is_full else None

    @property
    def x(self) -> np.ndarray | None:
        return np.exp(self.data[:, 0]) if self.is_full else None

    @property
    def w(self) -> np.ndarray | None:
        return self.data[:, 2] if self.is_full else None

    @property
    def u(self) -> np.ndarray | None:
        return np.exp(self.data[:, 2]) if self.is_full else None

    @property
    def p(self) -> np.ndarray:
        if self.is_full:
            return np.exp(self.data[:, 2] - self.data[:, 0])
        return self.data[:, 0]

    @property
    def q(self) -> np.ndarray:
        """Production signal c u / x seen by the y equation (NaN for degradation)."""
        if self.params.variant is Variant.DEGRADATION:
            return np.full(len(self.times), np.nan)
        return self.params.c * self.p

    def state(self, i: int) -> FullState | ReducedState:
        row = self.data[i]
        if self.is_full:
            return FullState(math.exp(row[0]), row[1], row[2])
        return ReducedState(row[0], row[1])

    @property
    def final(self) -> FullState | ReducedState:
        return self.state(-1)


def _full_rhs(params: ModelParams, inp: InputSignal | None) -> Callable[[float, np.ndarray], np.ndarray]:
    a, b, c, delta = params.a, params.b, params.c, params.delta
    lam, kappa = params.lam, params.kappa
    production = params.variant is Variant.PRODUCTION
    autocat = params.autocatalysis
    exp = math.exp

    def f(t: float, z: np.ndarray) -> np.ndarray:
        lx, y, w = z
        p = exp(w - lx)
        if production:
            dy = c * p - delta * y
            if autocat:
                dy += hill(params, y)
        else:
            dy = c * exp(w) - delta * exp(lx) * y
        dw = lam - kappa * y if inp is None else inp.log_derivative(t)
        return np.array([b * p - a, dy, dw])

    return f


def _reduced_rhs(params: ModelParams) -> Callable[[float, np.ndarray], np.ndarray]:
    a_lam = params.a + params.lam
    b, c, delta, kappa = params.b, params.c, params.delta, params.kappa
    autocat = params.autocatalysis

    def f(t: float, z: np.ndarray) -> np.ndarray:
        p, y = z
        dy = c * p - delta * y
        if autocat:
            dy += hill(params, y)
        return np.array([p * (a_lam - kappa * y - b * p), dy])

    return f


# Steadiness is the scaled derivative norm, except that a positive log-rate of p
# also counts: near the saddle at the origin the norm is tiny while p escapes.
def _full_steadiness(z: np.ndarray, dz: np.ndarray) -> float:
    p = math.exp(z[2] - z[0])
    p_rate = dz[2] - dz[0]
    scaled = math.hypot(p * p_rate, dz[1]) / (1.0 + math.hypot(p, z[1]))
    return max(scaled, p_rate)


def _reduced_steadiness(z: np.ndarray, dz: np.ndarray) -> float:
    scaled = math.hypot(dz[0], dz[1]) / (1.0 + math.hypot(z[0], z[1]))
    return max(scaled, dz[0] / z[0])


def _full_diverged(z: np.ndarray) -> bool:
    return z[1] > DIVERGENCE_LIMIT or z[2] - z[0] > math.log(DIVERGENCE_LIMIT)


def _reduced_diverged(z: np.ndarray) -> bool:
    return z[0] > DIVERGENCE_LIMIT or z[1] > DIVERGENCE_LIMIT


@dataclass
class _Recorder:
    output_times: tuple[float, ...] | None
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    next_out: int = 0

    def start(self, t: float, z: np.ndarray) -> None:
        if self.output_times is None:
            self._put(t, z)
            return
        while self.next_out < len(self.output_times) and self.output_times[self.next_out] < t:
            self.next_out += 1
        if self.next_out < len(self.output_times) and self.output_times[self.next_out] == t:
            self._put(t, z)
            self.next_out += 1
        elif self.times and self.times[-1] == t:
            # right limit replaces left limit at a segment boundary
            self.states[-1] = z.copy()

    def _put(self, t: float, z: np.ndarray) -> None:
        if self.times and self.times[-1] == t:
            self.states[-1] = z.copy()
        else:
            self.times.append(t)
            self.states.append(z.copy())

    def step(self, t0: float, z0: np.ndarray, t1: float, z1: np.ndarray, h: float, K: np.ndarray, positive: Sequence[int]) -> None:
        if self.output_times is None:
            self._put(t1, z1)
            return
        outs = self.output_times
        while self.next_out < len(outs) and outs[self.next_out] <= t1:
            t = outs[self.next_out]
            if t == t1:
                z = z1
            else:
                theta = (t - t0) / h
                z = z0 + h * (K.T @ (_P @ np.array([theta, theta**2, theta**3, theta**4])))
                for i in positive:
                    if z[i] <= 0:
                        z[i] = z0[i] * (z1[i] / z0[i]) ** theta
            self._put(t, z)
            self.next_out += 1


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _dopri_segment(f, t0, t1, z0, cfg: IntegratorConfig, positive, steady_fn, diverge_fn, rec: _Recorder, counters: dict, steady_since):
    """Advance from t0 to t1. Returns (t, z, terminal, steady_since)."""
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    h_max = cfg.step_limit
    h_min = 1e-14 * max(abs(cfg.t_end), cfg.horizon)
    t, z = t0, z0.astype(float)
    f0 = f(t, z)
    counters["rhs"] += 1

    # initial step heuristic (Hairer, Norsett & Wanner)
    sc = atol + rtol * np.abs(z)
    d0, d1 = _rms(z / sc), _rms(f0 / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    f1 = f(t + h0, z + h0 * f0)
    counters["rhs"] += 1
    d2 = _rms((f1 - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(100 * h0, h1, h_max)

    K = np.empty((7, len(z)))
    prev_rejected = False
    while t < t1:
        if t1 - t <= 1e-13 * max(1.0, abs(t1)):
            t = t1
            break
        if h < h_min:
            raise StiffnessError(t, h)
        if counters["steps"] + counters["rejected"] >= cfg.max_steps:
            raise StepBudgetError(t, cfg.max_steps)
        h_try = min(h, h_max, t1 - t)
        K[0] = f0
        for i in range(1, 6):
            K[i] = f(t + _C[i] * h_try, z + h_try * (_A[i] @ K[:i]))
        z_new = z + h_try * (_B @ K[:6])
        counters["rhs"] += 5
        ok = bool(np.all(np.isfinite(z_new))) and all(z_new[i] > 0 for i in positive)
        if not ok:
            # positivity is enforced by rejection, never by clamping
            h = 0.5 * h_try
            counters["rejected"] += 1
            prev_rejected = True
            continue
        f_new = f(t + h_try, z_new)
        counters["rhs"] += 1
        K[6] = f_new
        sc = atol + rtol * np.maximum(np.abs(z), np.abs(z_new))
        err = _rms(h_try * (_E @ K) / sc)
        if not math.isfinite(err) or err > 1.0:
            factor = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err**-0.2)
            h = h_try * factor
            counters["rejected"] += 1
            prev_rejected = True
            continue

        t_new = t + h_try if t1 - (t + h_try) > 1e-13 * max(1.0, abs(t1)) else t1
        rec.step(t, z, t_new, z_new, h_try, K, positive)
        counters["steps"] += 1
        t, z, f0 = t_new, z_new, f_new
        factor = 10.0 if err == 0 else min(10.0, 0.9 * err**-0.2)
        if prev_rejected:
            factor = min(1.0, factor)
        prev_rejected = False
        h = h_try * factor

        if diverge_fn(z):
            return t, z, Terminal.DIVERGED, steady_since
        if steady_fn(z, f0) < cfg.steady_tol:
            if steady_since is None:
                steady_since = t
            if cfg.stop_on_steady and t - steady_since >= cfg.window:
                return t, z, Terminal.STEADY, steady_since
        else:
            steady_since = None
    return t, z, Terminal.REACHED_END, steady_since


def integrate(
    params: ModelParams,
    initial: FullState | ReducedState,
    input: InputSignal | None = None,
    config: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate the full (FullState initial) or reduced (ReducedState initial) system.

    With an ``input`` the loop is open: ``initial.w`` is ignored and w follows
    ln u(t) from the input, restarted exactly at every input breakpoint.
    """
    cfg = config or IntegratorConfig()
    if isinstance(initial, ReducedState):
        if input is not None:
            raise WrongExperimentError("the reduced system is closed-loop only")
        if params.variant is not Variant.PRODUCTION:
            raise UnsupportedVariantError("the (p, y) reduction exists only for the production variant")
        p0, y0 = (float(v) for v in initial)
        if not (math.isfinite(p0) and math.isfinite(y0)) or p0 <= 0 or y0 <= 0:
            raise DomainError(f"initial reduced state must be positive, got {tuple(initial)}")
        f = _reduced_rhs(params)
        z0 = np.array([p0, y0])
        positive, steady_fn, diverge_fn, system = (0, 1), _reduced_steadiness, _reduced_diverged, "reduced"
    elif isinstance(initial, FullState):
        x0, y0, w0 = (float(v) for v in initial)
        if not all(math.isfinite(v) for v in (x0, y0, w0)) or x0 <= 0 or y0 <= 0:
            raise DomainError(f"initial full state must have finite components and x, y > 0, got {tuple(initial)}")
        if input is not None:
            w0 = input.log_value(cfg.t_start)
        f = _full_rhs(params, input)
        z0 = np.array([math.log(x0), y0, w0])
        positive, steady_fn, diverge_fn, system = (1,), _full_steadiness, _full_diverged, "full"
    else:
        raise TypeError(f"initial must be FullState or ReducedState, got {type(initial).__name__}")

    breaks = [cfg.t_start]
    if input is not None:
        breaks += sorted(b for b in input.breakpoints() if cfg.t_start < b < cfg.t_end)
    breaks.append(cfg.t_end)

    rec = _Recorder(cfg.output_times)
    counters = {"rhs": 0, "steps": 0, "rejected": 0}
    z = z0
    terminal = Terminal.REACHED_END
    steady_since = None
    t = cfg.t_start
    for seg_start, seg_end in zip(breaks, breaks[1:]):
        if seg_start > cfg.t_start and input is not None and system == "full":
            z = z.copy()
            z[2] = input.log_value(seg_start)
            steady_since = None
        rec.start(seg_start, z)
        t, z, terminal, steady_since = _dopri_segment(
            f, seg_start, seg_end, z, cfg, positive, steady_fn, diverge_fn, rec, counters, steady_since
        )
        if terminal is not Terminal.REACHED_END:
            break

    times = np.array(rec.times)
    data = np.array(rec.states).reshape(len(times), len(z0))
    if system == "full":
        if input is None:
            v = params.lam - params.kappa * data[:, 1]
        else:
            v = np.array([input.log_derivative(tt) for tt in times])
    else:
        v = params.lam - params.kappa * data[:, 1]
    meta = RunMeta(
        n_steps=counters["steps"],
        n_rejected=counters["rejected"],
        n_rhs=counters["rhs"],
        terminal=terminal,
        t_final=float(t),
        window=cfg.window,
    )
    return Trajectory(system, times, data, v, params, input is None, meta, input)


def w_slope(traj: Trajectory, window: float | None = None) -> float:
    """Least-squares slope of w = ln u over the final ``window`` of a closed-loop run."""
    if not traj.is_full or not traj.closed_loop:
        raise WrongExperimentError("slope of ln u needs a closed-loop full-system trajectory")
    window = traj.meta.window if window is None else window
    t, w = traj.times, traj.w
    mask = t >= t[-1] - window
    if mask.sum() < 2:
        mask = np.zeros_like(mask)
        mask[-2:] = True
    tt, ww = t[mask], w[mask]
    tc = tt - tt.mean()
    return float(np.dot(tc, ww - ww.mean()) / np.dot(tc, tc))


def classify_u_outcome(traj: Trajectory, slope_tol: float = 1e-4) -> Outcome:
    """Elimination / Proliferation / Marginal from the asymptotic slope of ln u."""
    if traj.meta.terminal is Terminal.DIVERGED:
        raise NumericalError("cannot classify a diverged trajectory")
    slope = w_slope(traj)
    return outcome_from_rate(slope, slope_tol)


def outcome_from_rate(mu: float, tol: float) -> Outcome:
    if mu < -tol:
        return Outcome.ELIMINATION
    if mu > tol:
        return Outcome.PROLIFERATION
    return Outcome.MARGINAL


def y_subsystem_equilibria(params: ModelParams, q: float) -> list[tuple[float, bool]]:
    """Roots of q - delta y + Hill(y) with a stability flag each, ascending."""
    def h(y: float) -> float:
        return q - params.delta * y + hill(params, y)

    y_hi = 1.01 * (q + params.V) / params.delta
    roots = find_roots(h, scan_grid(y_hi), 1e-13 * (1.0 + q))
    return [(r, -params.delta + hill_derivative(params, r) < 0) for r in roots]


def preadapted_state(params: ModelParams, u0: float = 1.0) -> FullState:
    """State at rest under constant input u0: x = (b/a) u0, y at the lowest stable root."""
    if params.variant is not Variant.PRODUCTION:
        return FullState(params.b / params.a * u0, params.a * params.c / (params.b * params.delta), math.log(u0))
    q = params.a * params.c / params.b
    stable = [y for y, is_stable in y_subsystem_equilibria(params, q) if is_stable]
    if not stable:
        raise ParameterError(f"no stable equilibrium of the y-subsystem at q={q}")
    return FullState(params.b / params.a * u0, stable[0], math.log(u0))


@dataclass(frozen=True)
class StepSummary:
    q0: float  # q at t = 0+, proportional to the fold change
    q_peak: float
    y0: float
    y_final: float


def simulate_step_response(
    params: ModelParams,
    u_minus: float,
    u_plus: float,
    preadapt: bool = True,
    config: IntegratorConfig | None = None,
) -> tuple[Trajectory, StepSummary]:
    """Open-loop response to a step u_minus -> u_plus at t = 0.

    Preadapted runs start from x = (b/a) u_minus and the lowest stable root of
    the y-subsystem at q = ac/b; otherwise from x = y = 1.
    """
    if params.variant is not Variant.PRODUCTION:
        raise UnsupportedVariantError("step response is defined for the production variant")
    cfg = config or IntegratorConfig(t_end=50.0)
    if preadapt:
        x0, y0, _ = preadapted_state(params, u_minus)
    else:
        x0, y0 = 1.0, 1.0
    if cfg.t_start > 0:
        raise ParameterError("step response needs t_start <= 0")
    signal = Step(u_minus, u_plus, 0.0)
    traj = integrate(params, FullState(x0, y0, math.log(u_minus)), signal, cfg)
    q_series = traj.q
    at_zero = np.flatnonzero(traj.times >= 0.0)
    q0 = float(q_series[at_zero[0]])
    summary = StepSummary(
        q0=q0,
        q_peak=float(np.max(q_series[at_zero])),
        y0=y0,
        y_final=float(traj.y[-1]),
    )
    return traj, summary
