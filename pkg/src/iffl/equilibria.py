"""Equilibria of the reduced (p, y) system, their stability, and limit predictors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from iffl.errors import InsufficientDataError, NumericalError, ParameterError, UnsupportedVariantError
from iffl.model import ModelParams, Variant, hill, hill_derivative, jacobian_reduced, reaction_term_f
from iffl.ode import Outcome, Terminal, Trajectory, outcome_from_rate
from iffl.roots import bisect, find_roots, scan_grid

MARGINAL_TOL = 1e-9
DEGENERATE_TOL = 1e-9


class Stability(str, Enum):
    STABLE = "StableNode/Focus"
    SADDLE = "Saddle"
    UNSTABLE = "Unstable"
    DEGENERATE = "Degenerate"


class Source(str, Enum):
    CLOSED_FORM = "ClosedForm"
    ROOT_SCAN = "RootScan"


@dataclass(frozen=True)
class EquilibriumReport:
    p_bar: float
    y_bar: float
    mu: float
    jacobian_trace: float
    jacobian_det: float
    stability: Stability
    outcome: Outcome
    source: Source

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stability"] = self.stability.value
        d["outcome"] = self.outcome.value
        d["source"] = self.source.value
        return d


def classify_jacobian(trace: float, det: float) -> Stability:
    if abs(det) < DEGENERATE_TOL or abs(trace) < DEGENERATE_TOL:
        return Stability.DEGENERATE
    if det < 0:
        return Stability.SADDLE
    return Stability.STABLE if trace < 0 else Stability.UNSTABLE


def trace_det(params: ModelParams, p: float, y: float) -> tuple[float, float]:
    (j11, j12), (j21, j22) = jacobian_reduced(params, p, y)
    return j11 + j22, j11 * j22 - j12 * j21


def _report(params: ModelParams, p: float, y: float, mu: float, source: Source) -> EquilibriumReport:
    tr, det = trace_det(params, p, y)
    return EquilibriumReport(
        p_bar=p,
        y_bar=y,
        mu=mu,
        jacobian_trace=tr,
        jacobian_det=det,
        stability=classify_jacobian(tr, det),
        outcome=outcome_from_rate(mu, MARGINAL_TOL),
        source=source,
    )


def _require_production(params: ModelParams) -> None:
    if params.variant is not Variant.PRODUCTION:
        raise UnsupportedVariantError("equilibrium analysis uses the (p, y) reduction of the production variant")


def closed_loop_equilibrium_linear(params: ModelParams) -> EquilibriumReport:
    """Closed-form attracting equilibrium of the V = 0 closed loop."""
    if params.autocatalysis:
        raise ParameterError("V > 0: use equilibria_autocat")
    _require_production(params)
    a, b, c, delta, kappa, lam = params.a, params.b, params.c, params.delta, params.kappa, params.lam
    if a + lam < 0:
        return _report(params, 0.0, 0.0, lam, Source.CLOSED_FORM)
    y_bar = c * (a + lam) / (b * delta + c * kappa)
    p_bar = delta / c * y_bar
    return _report(params, p_bar, y_bar, solve_mu(params), Source.CLOSED_FORM)


def solve_mu(params: ModelParams) -> float:
    """Asymptotic log-growth rate of u in the V = 0 closed loop."""
    if params.autocatalysis:
        raise ParameterError("solve_mu is defined for V = 0")
    a, b, c, delta, kappa, lam = params.a, params.b, params.c, params.delta, params.kappa, params.lam
    if lam < -a:
        return lam
    return (lam * b * delta - c * kappa * a) / (b * delta + c * kappa)


def open_loop_output_limit(params: ModelParams, mu_input: float) -> float:
    """Predicted lim y for an input whose log-derivative tends to ``mu_input``."""
    if params.autocatalysis:
        raise ParameterError("output limit formula is for V = 0")
    return params.c / (params.b * params.delta) * max(0.0, params.a + mu_input)


@dataclass(frozen=True)
class LimitEstimates:
    p_inf: float
    p_sup: float
    y_inf: float
    y_sup: float
    window_start: float
    n_samples: int
    steady: bool  # False flags that transients may not have died out


def estimate_p_y_limits(traj: Trajectory, fraction: float = 0.2) -> LimitEstimates:
    """Empirical liminf / limsup of p and y over the final ``fraction`` of the run."""
    t = traj.times
    start = t[-1] - fraction * (t[-1] - t[0])
    mask = t >= start
    n = int(mask.sum())
    if n < 10:
        raise InsufficientDataError(f"only {n} samples in the final window; need at least 10")
    p, y = traj.p[mask], traj.y[mask]
    return LimitEstimates(
        p_inf=float(p.min()),
        p_sup=float(p.max()),
        y_inf=float(y.min()),
        y_sup=float(y.max()),
        window_start=float(start),
        n_samples=n,
        steady=traj.meta.terminal is Terminal.STEADY,
    )


def equilibrium_function(params: ModelParams, y: float) -> float:
    """g(y) = a + lambda - kappa y + (b/c) f(y); its roots are the interior equilibrium y values."""
    return params.a + params.lam - params.kappa * y + params.b / params.c * (-params.delta * y + hill(params, y))


def axis_equilibria(params: ModelParams) -> list[EquilibriumReport]:
    """Equilibria (0, y) with y > 0 on the invariant p = 0 axis, i.e. positive roots of f.

    There u grows at rate lambda - kappa y, which is reported as mu.
    """
    _require_production(params)
    if params.V == 0:
        return []

    def f(y: float) -> float:
        return reaction_term_f(params, y)

    # f(y) < 0 once delta y exceeds V
    roots = find_roots(f, scan_grid(1.01 * params.V / params.delta), 1e-13 * (1.0 + params.V))
    return [_report(params, 0.0, y, params.lam - params.kappa * y, Source.ROOT_SCAN) for y in roots]


def equilibria_autocat(params: ModelParams) -> list[EquilibriumReport]:
    """Equilibria with p > 0, by grid scan and bisection.

    When there are none the p = 0 axis carries the dynamics, and its
    equilibria are returned instead (the origin alone when a + lambda <= 0).
    """
    _require_production(params)
    a_lam = params.a + params.lam
    if a_lam <= 0:
        return [_report(params, 0.0, 0.0, params.lam, Source.ROOT_SCAN)]

    def g(y: float) -> float:
        return equilibrium_function(params, y)

    ftol = 1e-12 * (1.0 + abs(a_lam))
    y_max = a_lam / params.kappa
    roots = find_roots(g, scan_grid(y_max), ftol)
    if roots and roots[0] <= y_max * 1e-9 * 1.0000001:
        # root at the lower grid edge: rescan closer to zero
        roots = find_roots(g, scan_grid(y_max, decades=15.0), ftol)
    if not roots and abs(g(y_max)) <= ftol:
        roots = [y_max]
    reports = []
    for y_bar in roots:
        p_bar = (a_lam - params.kappa * y_bar) / params.b
        if p_bar < 0:
            continue
        mu = params.b * p_bar - params.a
        reports.append(_report(params, p_bar, y_bar, mu, Source.ROOT_SCAN))
    return reports or axis_equilibria(params)


@dataclass(frozen=True)
class UniquenessResult:
    applicable: bool
    unique: bool
    max_hill_slope: float
    bound: float  # kappa + b delta / c
    margin: float  # bound - max_hill_slope


def uniqueness_condition(params: ModelParams) -> UniquenessResult:
    """Sufficient condition for a single interior equilibrium: g strictly decreasing."""
    bound = params.kappa + params.b * params.delta / params.c
    if params.V == 0:
        return UniquenessResult(True, True, 0.0, bound, bound)
    if params.n <= 1:
        # Hill slope is maximal at y -> 0+, where it equals V/K
        slope = params.V / params.K
        return UniquenessResult(False, slope < bound, slope, bound, bound - slope)
    y_star = ((params.n - 1) / (params.n + 1)) ** (1 / params.n) * params.K
    slope = hill_derivative(params, y_star)
    return UniquenessResult(True, slope < bound, slope, bound, bound - slope)


def switch_lambdas(params: ModelParams, lambda_range: tuple[float, float] | None = None) -> list[float]:
    """Growth rates at which the equilibrium rate mu changes sign.

    mu = 0 means p_bar = a/b, i.e. f(y_bar) = -ac/b; the matching lambda is
    kappa y_bar - (b/c) f(y_bar) - a, which reduces to kappa y_bar.
    """
    target = -params.a * params.c / params.b

    def h(y: float) -> float:
        return reaction_term_f(params, y) - target

    # f(y) - target < 0 once delta y exceeds V + ac/b
    y_hi = 1.01 * (params.V - target) / params.delta
    roots = find_roots(h, scan_grid(y_hi), 1e-13 * (1.0 + abs(target)))
    lams = sorted(params.kappa * y - params.b / params.c * reaction_term_f(params, y) - params.a for y in roots)
    if lambda_range is not None:
        lo, hi = lambda_range
        lams = [v for v in lams if lo <= v <= hi]
    return lams


def equilibria(params: ModelParams) -> list[EquilibriumReport]:
    """Closed form for V = 0, root scan otherwise."""
    if params.autocatalysis:
        return equilibria_autocat(params)
    return [closed_loop_equilibrium_linear(params)]


def check_interior(params: ModelParams, report: EquilibriumReport, tol: float = 1e-9) -> None:
    """Raise if an interior report does not balance both equations to ``tol``."""
    if report.p_bar == 0.0:
        return
    r1 = params.a + params.lam - params.kappa * report.y_bar - params.b * report.p_bar
    r2 = params.c * report.p_bar - params.delta * report.y_bar + hill(params, report.y_bar)
    if abs(r1) > tol or abs(r2) > tol:
        raise NumericalError(f"equilibrium residuals {r1:.3e}, {r2:.3e} exceed {tol}")


@dataclass(frozen=True)
class Nullclines:
    """Sampled nullcline components in the (p, y) plane, each an (N, 2) array of (p, y)."""

    p_axis: np.ndarray  # p = 0
    p_line: np.ndarray  # y = (a + lambda - b p) / kappa
    y_curve: np.ndarray  # c p - delta y + Hill(y) = 0, possibly several y per p


def _hill_vec(params: ModelParams, y: np.ndarray) -> np.ndarray:
    if params.V == 0:
        return np.zeros_like(y)
    r = np.power(np.maximum(y, 0.0) / params.K, params.n)
    with np.errstate(invalid="ignore", over="ignore"):
        out = params.V * r / (1.0 + r)
    return np.where(np.isinf(r), params.V, out)


def nullclines(params: ModelParams, samples: int = 512, p_max: float | None = None) -> Nullclines:
    _require_production(params)
    a_lam = params.a + params.lam
    if p_max is None:
        p_max = max(1.5 * a_lam / params.b, 1.0)
    y_max = 1.01 * (params.c * p_max + params.V) / params.delta
    y_top = max(y_max, a_lam / params.kappa)
    p_axis = np.column_stack([np.zeros(samples), np.linspace(0.0, y_top, samples)])

    p_hi = a_lam / params.b
    if p_hi > 0:
        ps = np.linspace(0.0, min(p_hi, p_max), samples)
        p_line = np.column_stack([ps, (a_lam - params.b * ps) / params.kappa])
    else:
        p_line = np.empty((0, 2))

    grid = scan_grid(y_max)
    rows = []
    for p in np.linspace(0.0, p_max, samples):
        vals = params.c * p - params.delta * grid + _hill_vec(params, grid)
        if p == 0.0:
            rows.append((0.0, 0.0))

        def h(y: float, p=p) -> float:
            return params.c * p - params.delta * y + hill(params, y)

        signs = np.sign(vals)
        for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
            rows.append((float(p), bisect(h, float(grid[i]), float(grid[i + 1]), 1e-13)))
    y_curve = np.array(rows) if rows else np.empty((0, 2))
    return Nullclines(p_axis, p_line, y_curve)

