"""Rational decision decomposition and investment-opinion dynamics.

The follower's optimum is the convex combination Z P1_bar + (1 - Z) P2_bar of
the two Merton allocations, with weight

    Z(t) = eta E(t) / (eta E(t) + vartheta),   E(t) = exp(varrho r (T - t)),

which solves the logistic equation dZ/dt = -varrho r Z (1 - Z) with
Z(T) = eta / (eta + vartheta).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import HerdInvestError
from .herd import Agents, EtaSolution, HerdConfig
from .market import MarketParams
from .merton import DecisionCurve, same_grid
from .quadrature import check_uniform, checked_exp, grid_weights


@dataclass(frozen=True, eq=False)
class OpinionCurve:
    """Weight Z(t) on a uniform grid.

    Solver-produced curves lie in (0, 1). ``decompose`` may return the
    boundary values 0 or 1 for degenerate inputs; :attr:`in_open_range`
    flags that.
    """

    t_grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        z = np.asarray(self.values, dtype=float)
        check_uniform(t)
        if z.shape != t.shape:
            raise ValueError(f"values shape {z.shape} does not match grid {t.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("opinion values must be finite")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", z)

    @property
    def in_open_range(self) -> bool:
        return bool(np.all((self.values > 0) & (self.values < 1)))


def _decay(herd: HerdConfig, market: MarketParams, t) -> np.ndarray:
    return checked_exp(herd.varrho * market.r * (herd.T - np.asarray(t, dtype=float)), "decay exponent")


def investment_opinion(
    eta_sol: EtaSolution | float,
    herd: HerdConfig,
    market: MarketParams,
    agents: Agents,
    t_grid=None,
) -> OpinionCurve:
    eta = eta_sol.eta if isinstance(eta_sol, EtaSolution) else float(eta_sol)
    t = herd.grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    vartheta = herd.vartheta(agents.alpha1, market.sigma)
    q = eta * _decay(herd, market, t)
    return OpinionCurve(t, q / (q + vartheta))


def decompose(optimal: DecisionCurve, rational_1: DecisionCurve, rational_2: DecisionCurve) -> OpinionCurve:
    """Recover Z = (P1* - P2_bar) / (P1_bar - P2_bar) pointwise.

    Raises ``ValueError`` when the rational curves coincide somewhere, since
    the weight is then undefined.
    """
    t = same_grid(optimal, rational_1, rational_2)
    denom = rational_1.values - rational_2.values
    scale = np.maximum(np.abs(rational_1.values), np.abs(rational_2.values))
    if np.any(np.abs(denom) <= 1e-14 * np.maximum(scale, 1e-300)):
        raise ValueError("undefined decomposition: rational decisions coincide (alpha1 == alpha2)")
    return OpinionCurve(t, (optimal.values - rational_2.values) / denom)


def recompose(opinion: OpinionCurve, rational_1: DecisionCurve, rational_2: DecisionCurve) -> DecisionCurve:
    """Z P1_bar + (1 - Z) P2_bar."""
    t = same_grid(opinion, rational_1, rational_2)
    z = opinion.values
    return DecisionCurve(t, z * rational_1.values + (1.0 - z) * rational_2.values)


def opinion_ode_rhs(z, herd: HerdConfig, market: MarketParams):
    """dZ/dt = -varrho r Z (1 - Z)."""
    z = np.asarray(z, dtype=float)
    out = -herd.varrho * market.r * z * (1.0 - z)
    return float(out) if out.ndim == 0 else out


class OpinionIntegrationError(HerdInvestError, ArithmeticError):
    pass


def integrate_opinion_ode(terminal: float, herd: HerdConfig, market: MarketParams, t_grid=None) -> OpinionCurve:
    """Classical RK4 from t = T back to t = 0 on the grid."""
    if not 0.0 < terminal < 1.0:
        raise ValueError(f"terminal opinion must lie in (0, 1), got {terminal}")
    t = herd.grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    check_uniform(t)
    k = -herd.varrho * market.r

    def rhs(z):
        return k * z * (1.0 - z)

    z = np.empty_like(t)
    z[-1] = terminal
    for i in range(len(t) - 1, 0, -1):
        h = t[i - 1] - t[i]
        zi = z[i]
        k1 = rhs(zi)
        k2 = rhs(zi + 0.5 * h * k1)
        k3 = rhs(zi + 0.5 * h * k2)
        k4 = rhs(zi + h * k3)
        z[i - 1] = zi + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        if not 0.0 <= z[i - 1] <= 1.0:
            raise OpinionIntegrationError(f"opinion left [0, 1] at t={t[i - 1]:.6g}: {z[i - 1]!r}")
    return OpinionCurve(t, z)


def equivalence_lambda(market: MarketParams, agents: Agents, herd: HerdConfig) -> float:
    """Penalty weight that makes the opinion-space problem equal the original.

    theta D[P1 || P2_bar] / I[Z] is the same constant for every weight curve Z:
    theta v^2 (alpha1 - alpha2)^2 / (alpha1^2 alpha2^2 sigma^4)
    = vartheta v^2 (alpha1 - alpha2)^2 / (alpha1 alpha2^2 sigma^2).
    """
    a1, a2, s2 = agents.alpha1, agents.alpha2, market.sigma**2
    return herd.theta * market.v**2 * (a1 - a2) ** 2 / (a1**2 * a2**2 * s2**2)


def opinion_penalty(opinion: OpinionCurve, herd: HerdConfig, market: MarketParams) -> float:
    """I[Z] = 1/2 ∫ exp(varrho r (t - T)) Z(t)^2 dt."""
    t = opinion.t_grid
    weight = checked_exp(herd.varrho * market.r * (t - t[-1]), "decay exponent")
    return float(0.5 * (weight * opinion.values**2) @ grid_weights(t))
