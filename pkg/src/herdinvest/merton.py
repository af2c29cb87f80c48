"""Single-agent Merton quantities under CARA utility.

For a deterministic allocation curve P(t) the terminal wealth is Gaussian, so
the expected CARA utility has a closed lognormal form; everything here is
evaluated by Simpson quadrature on the curve's own grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ModelRangeError
from .market import MarketParams
from .quadrature import EXP_LIMIT, check_uniform, checked_exp, grid_weights


@dataclass(frozen=True)
class AgentProfile:
    """Risk aversion ``alpha`` and initial wealth ``x0``."""

    alpha: float
    x0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"risk aversion must be positive, got {self.alpha}")
        if not math.isfinite(self.x0):
            raise ValueError(f"initial wealth must be finite, got {self.x0}")


@dataclass(frozen=True, eq=False)
class DecisionCurve:
    """Risky-asset holding P(t) sampled on a uniform grid over [0, T]."""

    t_grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        p = np.asarray(self.values, dtype=float)
        check_uniform(t)
        if p.shape != t.shape:
            raise ValueError(f"values shape {p.shape} does not match grid {t.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("decision values must be finite")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", p)

    @property
    def T(self) -> float:
        return float(self.t_grid[-1])

    @property
    def n(self) -> int:
        return len(self.t_grid) - 1

    def __len__(self) -> int:
        return len(self.values)

    def with_values(self, values) -> "DecisionCurve":
        return DecisionCurve(self.t_grid, values)

    def __add__(self, other: "DecisionCurve") -> "DecisionCurve":
        return self.with_values(self.values + _values_on(self, other))

    def __sub__(self, other: "DecisionCurve") -> "DecisionCurve":
        return self.with_values(self.values - _values_on(self, other))

    def scaled(self, c: float) -> "DecisionCurve":
        return self.with_values(c * self.values)


def _values_on(a: DecisionCurve, b: DecisionCurve) -> np.ndarray:
    if a.t_grid.shape != b.t_grid.shape or not np.allclose(a.t_grid, b.t_grid, rtol=0, atol=1e-12):
        raise ValueError("curves live on different grids")
    return b.values


def same_grid(*curves) -> np.ndarray:
    """Common grid of several curves; raises when they differ."""
    t0 = curves[0].t_grid
    for c in curves[1:]:
        if c.t_grid.shape != t0.shape or not np.allclose(c.t_grid, t0, rtol=0, atol=1e-12):
            raise ValueError("curves live on different grids")
    return t0


def rational_decision(params: MarketParams, alpha: float, T: float, t_grid) -> DecisionCurve:
    """Merton allocation v / (alpha sigma^2) * exp(r (t - T))."""
    if not alpha > 0:
        raise ValueError(f"risk aversion must be positive, got {alpha}")
    params.require_valid()
    t = np.asarray(t_grid, dtype=float)
    values = params.v / (alpha * params.sigma**2) * np.exp(params.r * (t - T))
    return DecisionCurve(t, values)


def cara_utility(alpha: float, x):
    """-(1/alpha) exp(-alpha x)."""
    if not alpha > 0:
        raise ValueError(f"risk aversion must be positive, got {alpha}")
    return -np.exp(-alpha * np.asarray(x, dtype=float)) / alpha


def terminal_wealth_moments(params: MarketParams, x0: float, decision: DecisionCurve) -> tuple[float, float]:
    """Mean and variance of X(T) when P(t) is deterministic.

    mean = x0 e^{rT} + v ∫ e^{r(T-t)} P dt,  var = sigma^2 ∫ e^{2r(T-t)} P^2 dt.
    """
    mean, var = _moments(params, x0, decision.t_grid, decision.values)
    return float(mean), float(var)


def _moments(params: MarketParams, x0: float, t_grid: np.ndarray, values: np.ndarray):
    # values may carry leading batch axes; integration is along the last one
    T = t_grid[-1]
    w = grid_weights(t_grid)
    growth = checked_exp(params.r * (T - t_grid), "growth exponent r*T")
    mean = x0 * float(checked_exp(params.r * T)) + params.v * ((values * growth) @ w)
    var = params.sigma**2 * ((values * growth) ** 2 @ w)
    return mean, var


def utility_exponent(params: MarketParams, alpha: float, x0: float, t_grid, values):
    """-alpha E[X(T)] + alpha^2 Var[X(T)] / 2, the log of -alpha * E[utility]."""
    mean, var = _moments(params, x0, np.asarray(t_grid, dtype=float), np.asarray(values, dtype=float))
    return -alpha * mean + 0.5 * alpha**2 * var


def expected_cara_utility(params: MarketParams, alpha: float, x0: float, decision: DecisionCurve) -> float:
    """E[-(1/alpha) exp(-alpha X(T))] = -(1/alpha) exp(-alpha mean + alpha^2 var / 2).

    Raises :class:`ModelRangeError` instead of returning ``-inf`` when the
    exponent exceeds 700.
    """
    if not alpha > 0:
        raise ValueError(f"risk aversion must be positive, got {alpha}")
    expo = float(utility_exponent(params, alpha, x0, decision.t_grid, decision.values))
    if expo > EXP_LIMIT:
        raise ModelRangeError(f"utility exponent {expo:.6g} exceeds {EXP_LIMIT:g}")
    return -math.exp(expo) / alpha
