"""IFFL model family: parameters, states, right-hand sides and rescaling.

Two variants are supported. In the production-inhibition variant the
inhibitor ``x`` divides the production of ``y``::

    x' = -a x + b u
    y' = c u / x - delta y + V y^n / (K^n + y^n)
    u' = (lambda - kappa y) u

In the degradation variant ``x`` accelerates the decay of ``y`` instead::

    y' = c u - delta x y

The input population ``u`` is always carried as ``w = ln u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple

from iffl.errors import DomainError, ParameterError, UnsupportedVariantError

if TYPE_CHECKING:
    from iffl.inputs import InputSignal


class Variant(str, Enum):
    PRODUCTION = "production"
    DEGRADATION = "degradation"


@dataclass(frozen=True)
class ModelParams:
    """Rate constants of the IFFL family.

    ``lam`` is the open-loop growth rate of ``u`` (``lambda`` is reserved in
    Python). ``V = 0`` switches the autocatalytic Hill term off.
    """

    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    delta: float = 1.0
    kappa: float = 1.0
    lam: float = 0.0
    V: float = 0.0
    K: float = 1.0
    n: float = 2.0
    variant: Variant = Variant.PRODUCTION

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("a", "b", "c", "delta", "kappa", "lam", "V", "K", "n"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite real, got {value!r}")
        for name in ("a", "b", "c", "delta", "kappa", "K"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.V < 0:
            raise ParameterError(f"V must be non-negative, got {self.V}")
        if self.n < 1:
            raise ParameterError(f"Hill exponent n must be >= 1, got {self.n}")
        if self.variant is Variant.DEGRADATION and self.V > 0:
            raise ParameterError("the degradation variant has no autocatalytic term; set V = 0")

    @property
    def autocatalysis(self) -> bool:
        return self.V > 0

    def with_(self, **changes) -> ModelParams:
        return replace(self, **changes)


class FullState(NamedTuple):
    """Phase point (x, y, w) of the three-dimensional system, w = ln u."""

    x: float
    y: float
    w: float

    @property
    def u(self) -> float:
        return math.exp(self.w)


class ReducedState(NamedTuple):
    """Phase point (p, y) of the planar system, p = u / x."""

    p: float
    y: float


def hill(params: ModelParams, y: float) -> float:
    """Autocatalytic term V y^n / (K^n + y^n)."""
    if params.V == 0.0 or y <= 0.0:
        return 0.0
    # ratio form avoids overflow of y^n for large y
    if y <= params.K:
        r = _pow(y / params.K, params.n)
        return params.V * r / (1.0 + r)
    return params.V / (1.0 + _pow(params.K / y, params.n))


def hill_derivative(params: ModelParams, y: float) -> float:
    """d/dy of the Hill term, V n K^n y^(n-1) / (K^n + y^n)^2."""
    if params.V == 0.0:
        return 0.0
    if y <= 0.0:
        return params.V / params.K if params.n == 1 else 0.0
    if y <= params.K:
        r = _pow(y / params.K, params.n)
        return params.V * params.n * r / (y * (1.0 + r) ** 2)
    s = _pow(params.K / y, params.n)
    return params.V * params.n * s / (y * (1.0 + s) ** 2)


def _pow(base: float, n: float) -> float:
    if float(n).is_integer():
        return base ** int(n)
    return math.exp(n * math.log(base))


def reaction_term_f(params: ModelParams, y: float) -> float:
    """Net self-dynamics of y at fixed production: -delta y + Hill(y)."""
    if y <= 0:
        raise DomainError(f"y must be positive, got {y}")
    return -params.delta * y + hill(params, y)


def rhs_full(
    params: ModelParams,
    state: FullState,
    u_external: InputSignal | None = None,
    t: float = 0.0,
) -> FullState:
    """Time derivative (x', y', w') of the full system.

    With ``u_external`` the loop is open: w follows the input's log-derivative
    instead of ``lambda - kappa y``.
    """
    x, y, w = state
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(w)):
        raise DomainError(f"non-finite state {tuple(state)}")
    if x <= 0 or y <= 0:
        raise DomainError(f"x and y must be positive, got x={x}, y={y}")
    u = math.exp(w)
    dx = -params.a * x + params.b * u
    if params.variant is Variant.PRODUCTION:
        dy = params.c * u / x - params.delta * y + hill(params, y)
    else:
        dy = params.c * u - params.delta * x * y
    if u_external is None:
        dw = params.lam - params.kappa * y
    else:
        dw = u_external.log_derivative(t)
    return FullState(dx, dy, dw)


def rhs_reduced(params: ModelParams, state: ReducedState) -> ReducedState:
    """Time derivative (p', y') of the planar closed-loop system."""
    if params.variant is not Variant.PRODUCTION:
        raise UnsupportedVariantError("the (p, y) reduction exists only for the production variant")
    p, y = state
    if not (math.isfinite(p) and math.isfinite(y)):
        raise DomainError(f"non-finite state {tuple(state)}")
    dp = p * (params.a + params.lam - params.kappa * y - params.b * p)
    dy = params.c * p - params.delta * y + hill(params, y)
    return ReducedState(dp, dy)


def rhs_open_loop_p(params: ModelParams, p: float, v: float) -> float:
    """p' = p (a + v - b p) for an external input with log-derivative v."""
    if not (math.isfinite(p) and math.isfinite(v)):
        raise DomainError(f"non-finite input p={p}, v={v}")
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}")
    return p * (params.a + v - params.b * p)


def jacobian_reduced(params: ModelParams, p: float, y: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Analytic Jacobian of :func:`rhs_reduced` at (p, y)."""
    j11 = params.a + params.lam - params.kappa * y - 2.0 * params.b * p
    j12 = -params.kappa * p
    j21 = params.c
    j22 = -params.delta + hill_derivative(params, y)
    return (j11, j12), (j21, j22)


@dataclass(frozen=True)
class Scaling:
    """Map between original and normalized (a = b = c = 1) coordinates.

    Original = scale * normalized, for x, y and t. u is not rescaled.
    """

    x_scale: float
    y_scale: float
    t_scale: float

    def to_original(self, t_star: float, state: FullState) -> tuple[float, FullState]:
        return (
            t_star * self.t_scale,
            FullState(state.x * self.x_scale, state.y * self.y_scale, state.w),
        )

    def to_normalized(self, t: float, state: FullState) -> tuple[float, FullState]:
        return (
            t / self.t_scale,
            FullState(state.x / self.x_scale, state.y / self.y_scale, state.w),
        )


def normalize_params(params: ModelParams) -> tuple[ModelParams, Scaling]:
    """Rescale to a = b = c = 1, returning the starred parameters and the map back."""
    if params.autocatalysis:
        raise UnsupportedVariantError("no rescaling is defined for the autocatalytic system")
    a, b, c = params.a, params.b, params.c
    if params.variant is Variant.PRODUCTION:
        delta = params.delta / a
        kappa = c * params.kappa / (a * b)
        scaling = Scaling(x_scale=b / a, y_scale=c / b, t_scale=1.0 / a)
    else:
        delta = b * params.delta / a**2
        kappa = c * params.kappa / a**2
        scaling = Scaling(x_scale=b / a, y_scale=c / a, t_scale=1.0 / a)
    starred = replace(params, a=1.0, b=1.0, c=1.0, delta=delta, kappa=kappa, lam=params.lam / a)
    return starred, scaling
