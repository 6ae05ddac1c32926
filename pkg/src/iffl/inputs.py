"""External input signals u(t) for open-loop runs.

Every signal exposes ``log_value(t) = ln u(t)`` and the log-derivative
``log_derivative(t) = u'(t) / u(t)``; the integrator consumes these rather than
u itself so that exponentially growing or decaying inputs never overflow.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Union

from iffl.errors import ParameterError


@dataclass(frozen=True)
class Constant:
    alpha: float

    def __post_init__(self):
        _positive("alpha", self.alpha)

    def log_value(self, t: float) -> float:
        return math.log(self.alpha)

    def log_derivative(self, t: float) -> float:
        return 0.0

    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class Linear:
    """u(t) = alpha + beta t; only defined while positive."""

    alpha: float
    beta: float

    def __post_init__(self):
        _positive("alpha", self.alpha)
        if not math.isfinite(self.beta):
            raise ParameterError("beta must be finite")

    def log_value(self, t: float) -> float:
        u = self.alpha + self.beta * t
        if u <= 0:
            raise ParameterError(f"linear input non-positive at t={t}")
        return math.log(u)

    def log_derivative(self, t: float) -> float:
        return self.beta / (self.alpha + self.beta * t)

    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class Exponential:
    """u(t) = beta exp(mu t)."""

    beta: float
    mu: float

    def __post_init__(self):
        _positive("beta", self.beta)
        if not math.isfinite(self.mu):
            raise ParameterError("mu must be finite")

    def log_value(self, t: float) -> float:
        return math.log(self.beta) + self.mu * t

    def log_derivative(self, t: float) -> float:
        return self.mu

    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class Step:
    """u jumps from ``u_minus`` to ``u_plus`` at ``t_step`` (right-continuous)."""

    u_minus: float
    u_plus: float
    t_step: float = 0.0

    def __post_init__(self):
        _positive("u_minus", self.u_minus)
        _positive("u_plus", self.u_plus)

    def log_value(self, t: float) -> float:
        return math.log(self.u_plus if t >= self.t_step else self.u_minus)

    def log_derivative(self, t: float) -> float:
        return 0.0

    def breakpoints(self) -> tuple[float, ...]:
        return (self.t_step,)


@dataclass(frozen=True)
class Oscillating:
    """u(t) = alpha exp(-(amplitude/omega) cos(omega t)), so v(t) = amplitude sin(omega t)."""

    alpha: float
    amplitude: float
    omega: float = 1.0

    def __post_init__(self):
        _positive("alpha", self.alpha)
        _positive("omega", self.omega)

    def log_value(self, t: float) -> float:
        return math.log(self.alpha) - (self.amplitude / self.omega) * math.cos(self.omega * t)

    def log_derivative(self, t: float) -> float:
        return self.amplitude * math.sin(self.omega * t)

    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class Sampled:
    """Tabulated input, linearly interpolated in ln u (piecewise-constant v).

    Held constant outside the table's time range.
    """

    table: tuple[tuple[float, float], ...]

    def __post_init__(self):
        table = tuple((float(t), float(u)) for t, u in self.table)
        if len(table) < 2:
            raise ParameterError("sampled input needs at least two (t, u) pairs")
        for (t0, _), (t1, _) in zip(table, table[1:]):
            if not t1 > t0:
                raise ParameterError("sampled input times must be strictly increasing")
        for _, u in table:
            _positive("u", u)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "_times", [t for t, _ in table])
        object.__setattr__(self, "_logs", [math.log(u) for _, u in table])

    def _segment(self, t: float) -> int | None:
        times = self._times
        if t < times[0] or t >= times[-1]:
            return None
        return bisect.bisect_right(times, t) - 1

    def log_value(self, t: float) -> float:
        times, logs = self._times, self._logs
        if t <= times[0]:
            return logs[0]
        if t >= times[-1]:
            return logs[-1]
        i = self._segment(t)
        frac = (t - times[i]) / (times[i + 1] - times[i])
        return logs[i] + frac * (logs[i + 1] - logs[i])

    def log_derivative(self, t: float) -> float:
        i = self._segment(t)
        if i is None:
            return 0.0
        return (self._logs[i + 1] - self._logs[i]) / (self._times[i + 1] - self._times[i])

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(self._times)


InputSignal = Union[Constant, Linear, Exponential, Step, Oscillating, Sampled]


def _positive(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be positive and finite, got {value!r}")
