"""Uniform time grids and composite Simpson quadrature.

Everything in the package integrates over the same uniform grid on [0, T],
so the weights are exposed directly; batch evaluations are then a single
matrix-vector product.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ModelRangeError

DEFAULT_GRID_N = 1000
# exp() overflows just above 709
EXP_LIMIT = 700.0


def even_intervals(n: int) -> int:
    """Round an interval count up to the next even number (Simpson needs pairs)."""
    n = int(n)
    if n < 2:
        raise ValueError(f"need at least 2 intervals, got {n}")
    return n + (n % 2)


def time_grid(T: float, n: int = DEFAULT_GRID_N) -> np.ndarray:
    """Uniform partition of [0, T] with an even number of intervals."""
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    n = even_intervals(n)
    grid = np.linspace(0.0, T, n + 1)
    grid[-1] = T
    return grid


def check_uniform(t_grid: np.ndarray, rtol: float = 1e-9) -> float:
    """Return the spacing of ``t_grid`` or raise if it is not a uniform grid from 0."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 3:
        raise ValueError("time grid must be 1-d with at least 3 points")
    if t_grid[0] != 0.0:
        raise ValueError("time grid must start at 0")
    h = (t_grid[-1] - t_grid[0]) / (t_grid.size - 1)
    if not h > 0 or np.max(np.abs(np.diff(t_grid) - h)) > rtol * max(h, 1.0):
        raise ValueError("time grid must be uniform and increasing")
    return h


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``n`` (even) intervals of width ``h``."""
    if n < 2 or n % 2:
        raise ValueError(f"Simpson's rule needs an even interval count, got {n}")
    w = np.empty(n + 1)
    w[0::2] = 2.0
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def grid_weights(t_grid: np.ndarray) -> np.ndarray:
    """Simpson weights matching a uniform grid."""
    h = check_uniform(t_grid)
    return simpson_weights(len(t_grid) - 1, h)


def simpson(values: np.ndarray, t_grid: np.ndarray) -> float | np.ndarray:
    """Integrate samples on ``t_grid`` along the last axis."""
    return np.asarray(values, dtype=float) @ grid_weights(t_grid)


def checked_exp(x, what: str = "exponent"):
    """``exp`` that refuses to saturate to 0/inf."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > EXP_LIMIT):
        worst = float(np.max(np.abs(x)))
        raise ModelRangeError(f"{what} magnitude {worst:.6g} exceeds {EXP_LIMIT:g}")
    return np.exp(x)
