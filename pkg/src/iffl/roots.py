"""Bracketing root scans for scalar functions on a bounded interval."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

GRID_POINTS = 2048


def scan_grid(hi: float, n: int = GRID_POINTS, decades: float = 9.0) -> np.ndarray:
    """Points in (0, hi]: half log-spaced from hi*10^-decades, half linear.

    The log half resolves roots crowded near zero, the linear half the bulk.
    """
    if not hi > 0:
        raise ValueError(f"scan upper bound must be positive, got {hi}")
    n_log = n // 2
    log_part = np.logspace(math.log10(hi) - decades, math.log10(hi), n_log)
    lin_part = np.linspace(hi / (n - n_log), hi, n - n_log)
    grid = np.unique(np.concatenate([log_part, lin_part]))
    return grid[grid > 0]


def bisect(g: Callable[[float], float], lo: float, hi: float, ftol: float, max_iter: int = 400) -> float:
    """Bisection on a sign-changing bracket until |g| < ftol or the bracket collapses."""
    g_lo = g(lo)
    g_hi = g(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if (g_lo > 0) == (g_hi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    best, best_val = (lo, abs(g_lo)) if abs(g_lo) < abs(g_hi) else (hi, abs(g_hi))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) < best_val:
            best, best_val = mid, abs(g_mid)
        if abs(g_mid) < ftol or mid <= lo or mid >= hi:
            return mid if abs(g_mid) <= best_val else best
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return best


def find_roots(g: Callable[[float], float], grid: np.ndarray, ftol: float) -> list[float]:
    """All roots of g detected as sign changes (or exact zeros) along ``grid``."""
    values = [g(float(y)) for y in grid]
    roots: list[float] = []
    for i, val in enumerate(values):
        if val == 0.0:
            roots.append(float(grid[i]))
            continue
        if i + 1 < len(values):
            nxt = values[i + 1]
            if nxt != 0.0 and (val > 0) != (nxt > 0):
                roots.append(bisect(g, float(grid[i]), float(grid[i + 1]), ftol))
    return roots
