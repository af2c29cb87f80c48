"""Follower's optimal allocation under a herd-deviation penalty.

The follower (agent 1) maximises expected CARA utility minus theta times a
time-weighted squared deviation from the leader's (agent 2) Merton
allocation. The optimum is explicit up to a positive scalar eta, which is
the fixed point of

    f(xi) = eta_lower * exp( ∫_0^T c / (xi e^{varrho r (T-t)} + vartheta)^2 dt ),
    c = vartheta^2 v^2 (alpha1/alpha2 - 1)^2 / (2 sigma^2).

``solve_eta`` runs the plain fixed-point iteration when the contraction
bound guarantees convergence and falls back to bisection on f(xi) - xi
otherwise (f is strictly decreasing, so the root is unique).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .exceptions import ConvergenceError, ModelRangeError
from .market import MarketParams
from .merton import AgentProfile, DecisionCurve
from .quadrature import DEFAULT_GRID_N, EXP_LIMIT, checked_exp, even_intervals, grid_weights, time_grid

Method = Literal["auto", "fixed-point", "bisection"]
MAX_ITERATIONS = 10_000


@dataclass(frozen=True)
class HerdConfig:
    """Herd coefficient ``theta``, decay rate ``rho``, horizon ``T`` and numerics.

    The modified coefficients are derived: ``varrho = 2 - rho`` here and
    ``vartheta = theta / (alpha1 sigma^2)`` via :meth:`vartheta`, because it
    depends on the follower and the market.
    """

    theta: float
    rho: float = 0.0
    T: float = 50.0
    tol: float = 1e-12
    grid_n: int = DEFAULT_GRID_N

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise ValueError(
                f"herd coefficient must be positive (got {self.theta}); use the merton command for theta=0"
            )
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise ValueError(f"decay rate must be >= 0, got {self.rho}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon must be positive, got {self.T}")
        if not self.tol > 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        object.__setattr__(self, "grid_n", even_intervals(self.grid_n))

    @classmethod
    def from_vartheta(cls, vartheta: float, alpha1: float, sigma: float, **kwargs) -> "HerdConfig":
        return cls(theta=vartheta * alpha1 * sigma**2, **kwargs)

    @property
    def varrho(self) -> float:
        return 2.0 - self.rho

    def vartheta(self, alpha1: float, sigma: float) -> float:
        return self.theta / (alpha1 * sigma**2)

    def grid(self) -> np.ndarray:
        return time_grid(self.T, self.grid_n)

    def replace(self, **changes) -> "HerdConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Agents:
    """The follower ``a1`` and the leader ``a2``."""

    a1: AgentProfile
    a2: AgentProfile

    @property
    def alpha1(self) -> float:
        return self.a1.alpha

    @property
    def alpha2(self) -> float:
        return self.a2.alpha

    @property
    def x1(self) -> float:
        return self.a1.x0

    @property
    def ratio(self) -> float:
        return self.a1.alpha / self.a2.alpha


@dataclass(frozen=True)
class Scenario:
    """Everything needed to pose the follower's problem."""

    market: MarketParams
    agents: Agents
    herd: HerdConfig

    @property
    def vartheta(self) -> float:
        return self.herd.vartheta(self.agents.alpha1, self.market.sigma)

    def grid(self) -> np.ndarray:
        return self.herd.grid()


@dataclass(frozen=True)
class EtaSolution:
    eta: float
    eta_lower: float
    eta_upper: float
    method: str
    iterations: int
    residual: float
    contraction_ok: bool
    contraction_value: float = float("nan")


@dataclass(frozen=True)
class Contraction:
    value: float
    ok: bool

    def __bool__(self) -> bool:
        return self.ok


class _IterationMap:
    """f(xi) with the grid, weights and exponentials computed once."""

    def __init__(self, market: MarketParams, agents: Agents, herd: HerdConfig):
        market.require_valid()
        r, v, sigma = market.r, market.v, market.sigma
        T = herd.T
        self.vartheta = herd.vartheta(agents.alpha1, sigma)
        self.lower_exponent = -agents.alpha1 * agents.x1 * _exp(r * T, "growth exponent r*T") - v**2 * T / (
            2 * sigma**2
        )
        self.eta_lower = float(checked_exp(self.lower_exponent, "lower-bound exponent"))
        if self.eta_lower == 0.0:
            raise ModelRangeError("eta lower bound underflows to zero")
        t = herd.grid()
        self.weights = grid_weights(t)
        self.decay = checked_exp(herd.varrho * r * (T - t), "decay exponent varrho*r*(T-t)")
        self.coef = self.vartheta**2 * v**2 * (agents.ratio - 1.0) ** 2 / (2 * sigma**2)

    def exponent(self, xi: float) -> float:
        if self.coef == 0.0:
            return 0.0
        return float(self.coef * (self.weights @ (1.0 / (xi * self.decay + self.vartheta) ** 2)))

    def __call__(self, xi: float) -> float:
        if not xi > 0:
            raise ValueError(f"iteration map needs xi > 0, got {xi}")
        expo = self.exponent(xi)
        if expo > EXP_LIMIT:
            raise ModelRangeError(f"iteration exponent {expo:.6g} exceeds {EXP_LIMIT:g}")
        return self.eta_lower * math.exp(expo)


def _exp(x: float, what: str) -> float:
    return float(checked_exp(x, what))


def eta_bounds(market: MarketParams, agents: Agents, herd: HerdConfig) -> tuple[float, float]:
    """The self-mapping interval [eta_lower, f(eta_lower)] of the iteration."""
    f = _IterationMap(market, agents, herd)
    return f.eta_lower, f(f.eta_lower)


def iteration_map(xi: float, market: MarketParams, agents: Agents, herd: HerdConfig) -> float:
    return _IterationMap(market, agents, herd)(xi)


def _contraction_factor(z: float, T: float) -> float:
    # (1 - e^{-2zT}) / (2z), tending to T as z -> 0
    if z == 0.0:
        return T
    if abs(z) < 1e-8:
        return T * (1.0 - z * T)
    return -math.expm1(-2.0 * z * T) / (2.0 * z)


def check_contraction(market: MarketParams, agents: Agents, herd: HerdConfig) -> Contraction:
    """Sufficient condition for the plain fixed-point iteration to converge.

    L = vartheta^2 v^2 (alpha1 - alpha2)^2 eta_upper / (alpha2^2 sigma^2 eta_lower^3)
        * (1 - e^{-2 varrho r T}) / (2 varrho r),
    with the last factor replaced by T when varrho r = 0.
    """
    f = _IterationMap(market, agents, herd)
    lo = f.eta_lower
    hi = f(lo)
    z = herd.varrho * market.r
    if abs(2 * z * herd.T) > EXP_LIMIT:
        raise ModelRangeError(f"contraction exponent {2 * z * herd.T:.6g} exceeds {EXP_LIMIT:g}")
    L = (
        f.vartheta**2
        * market.v**2
        * (agents.alpha1 - agents.alpha2) ** 2
        * hi
        / (agents.alpha2**2 * market.sigma**2 * lo**3)
        * _contraction_factor(z, herd.T)
    )
    return Contraction(float(L), bool(L <= 1.0))


def solve_eta(market: MarketParams, agents: Agents, herd: HerdConfig, method: Method = "auto") -> EtaSolution:
    """Integral constant eta with residual |f(eta) - eta| <= herd.tol.

    ``method="auto"`` iterates from eta_lower when the contraction bound holds
    and bisects otherwise; the other values force one path.

    Raises
    ------
    ConvergenceError
        If the iteration budget (10^4 steps) runs out.
    """
    f = _IterationMap(market, agents, herd)
    lo = f.eta_lower
    hi = f(lo)
    contraction = check_contraction(market, agents, herd)
    if method == "auto":
        method = "fixed-point" if contraction.ok else "bisection"
    if method == "fixed-point":
        eta, residual, its = _fixed_point(f, lo, herd.tol)
    elif method == "bisection":
        eta, residual, its = _bisect(f, lo, hi, herd.tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    return EtaSolution(
        eta=eta,
        eta_lower=lo,
        eta_upper=hi,
        method=method,
        iterations=its,
        residual=residual,
        contraction_ok=contraction.ok,
        contraction_value=contraction.value,
    )


def _fixed_point(f: _IterationMap, start: float, tol: float):
    eta = start
    step = math.inf
    for k in range(1, MAX_ITERATIONS + 1):
        nxt = f(eta)
        step = abs(nxt - eta)
        eta = nxt
        if step < tol:
            residual = abs(f(eta) - eta)
            if residual <= tol:
                return eta, residual, k
    raise ConvergenceError(
        f"fixed-point iteration did not converge in {MAX_ITERATIONS} steps (last step {step:.3g})",
        last=eta,
        iterations=MAX_ITERATIONS,
    )


def _bisect(f: _IterationMap, lo: float, hi: float, tol: float):
    # g(xi) = f(xi) - xi is strictly decreasing with g(lo) >= 0 >= g(hi)
    g_lo = f(lo) - lo
    if abs(g_lo) <= tol:
        return lo, abs(g_lo), 1
    g_hi = f(hi) - hi
    if abs(g_hi) <= tol:
        return hi, abs(g_hi), 2
    best, best_res = (lo, abs(g_lo)) if abs(g_lo) < abs(g_hi) else (hi, abs(g_hi))
    for k in range(3, MAX_ITERATIONS + 1):
        mid = 0.5 * (lo + hi)
        g = f(mid) - mid
        if abs(g) < best_res:
            best, best_res = mid, abs(g)
        if abs(g) <= tol:
            return mid, abs(g), k
        if mid <= lo or mid >= hi:
            break
        if g > 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection stalled with residual {best_res:.3g} > tol {tol:.3g}", last=best, iterations=k
    )


def optimal_decision(
    market: MarketParams,
    agents: Agents,
    herd: HerdConfig,
    eta_sol: EtaSolution | float,
    t_grid=None,
) -> DecisionCurve:
    """Follower's optimal holding

        P1*(t) = (eta a2 s^2 E(t) + theta) / (eta a1 s^2 E(t) + theta) * v / (a2 s^2) * e^{r(t-T)},

    with E(t) = exp(varrho r (T - t)).
    """
    eta = eta_sol.eta if isinstance(eta_sol, EtaSolution) else float(eta_sol)
    t = herd.grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    r, v, s2, T = market.r, market.v, market.sigma**2, herd.T
    E = checked_exp(herd.varrho * r * (T - t), "decay exponent varrho*r*(T-t)")
    a1, a2, theta = agents.alpha1, agents.alpha2, herd.theta
    bracket = (eta * a2 * s2 * E + theta) / (eta * a1 * s2 * E + theta)
    return DecisionCurve(t, bracket * v / (a2 * s2) * np.exp(r * (t - T)))


def solve(scenario: Scenario, method: Method = "auto") -> tuple[EtaSolution, DecisionCurve]:
    """Convenience: eta and the optimal curve on the scenario's grid."""
    sol = solve_eta(scenario.market, scenario.agents, scenario.herd, method)
    return sol, optimal_decision(scenario.market, scenario.agents, scenario.herd, sol)
