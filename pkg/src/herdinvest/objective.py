"""Objective functional of the herd problem and two independent optimality checks.

J[P1] = E[u(X1(T))] - theta * D[P1 || P2_bar], with
D[P1 || P2] = 1/2 ∫ e^{rho r (T-t)} (P1 - P2)^2 dt.

``first_variation_test`` probes J along smooth directions around a candidate;
``brute_force_optimize`` maximises J directly over grid curves by gradient
ascent, without using the closed-form optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import ConvergenceError, ModelRangeError
from .herd import Agents, HerdConfig
from .market import MarketParams
from .merton import DecisionCurve, expected_cara_utility, rational_decision, same_grid, utility_exponent
from .quadrature import EXP_LIMIT, check_uniform, checked_exp, grid_weights, time_grid

N_FOURIER = 6


@dataclass(frozen=True)
class ObjectiveBreakdown:
    expected_utility: float
    avg_deviation: float
    theta: float

    @property
    def total(self) -> float:
        return self.expected_utility - self.theta * self.avg_deviation


def average_deviation(p1: DecisionCurve, p2: DecisionCurve, rho: float, r: float, T: float) -> float:
    """1/2 ∫_0^T e^{rho r (T-t)} (P1 - P2)^2 dt by Simpson on the shared grid."""
    if rho < 0:
        raise ValueError(f"decay rate must be >= 0, got {rho}")
    t = same_grid(p1, p2)
    weight = checked_exp(rho * r * (T - t), "deviation weight exponent")
    return float(0.5 * (weight * (p1.values - p2.values) ** 2) @ grid_weights(t))


def objective_value(p1: DecisionCurve, market: MarketParams, agents: Agents, herd: HerdConfig) -> ObjectiveBreakdown:
    _check_horizon(p1, herd)
    leader = rational_decision(market, agents.alpha2, herd.T, p1.t_grid)
    return ObjectiveBreakdown(
        expected_utility=expected_cara_utility(market, agents.alpha1, agents.x1, p1),
        avg_deviation=average_deviation(p1, leader, herd.rho, market.r, herd.T),
        theta=herd.theta,
    )


def _check_horizon(curve: DecisionCurve, herd: HerdConfig):
    if not math.isclose(curve.T, herd.T, rel_tol=1e-12):
        raise ValueError(f"curve horizon {curve.T} differs from configured T={herd.T}")


class _Objective:
    """J evaluated for a stack of curves (rows) sharing one grid."""

    def __init__(self, t_grid, market: MarketParams, agents: Agents, herd: HerdConfig):
        self.t = np.asarray(t_grid, dtype=float)
        check_uniform(self.t)
        self.market, self.agents, self.herd = market, agents, herd
        self.weights = grid_weights(self.t)
        self.leader = rational_decision(market, agents.alpha2, herd.T, self.t).values
        self.dev_weight = 0.5 * herd.theta * checked_exp(herd.rho * market.r * (herd.T - self.t)) * self.weights

    def __call__(self, values: np.ndarray) -> np.ndarray:
        a1 = self.agents.alpha1
        expo = utility_exponent(self.market, a1, self.agents.x1, self.t, values)
        if np.any(expo > EXP_LIMIT):
            raise ModelRangeError(f"utility exponent {np.max(expo):.6g} exceeds {EXP_LIMIT:g}")
        penalty = (values - self.leader) ** 2 @ self.dev_weight
        return -np.exp(expo) / a1 - penalty


def perturbation_directions(t_grid, count: int, seed: int = 0, n_knots: int = 8) -> np.ndarray:
    """Smooth unit (sup-norm) directions: low Fourier modes, then random cubic splines."""
    t = np.asarray(t_grid, dtype=float)
    T = t[-1]
    basis = [np.ones_like(t)]
    for k in range(1, N_FOURIER + 1):
        basis.append(np.cos(k * np.pi * t / T))
        basis.append(np.sin(k * np.pi * t / T))
    rng = np.random.default_rng(seed)
    knots = np.linspace(0.0, T, n_knots)
    while len(basis) < count:
        basis.append(CubicSpline(knots, rng.standard_normal(n_knots))(t))
    h = np.array(basis[:count])
    return h / np.max(np.abs(h), axis=1, keepdims=True)


def _directional(p_star: DecisionCurve, market, agents, herd, directions, epsilon, seed):
    _check_horizon(p_star, herd)
    J = _Objective(p_star.t_grid, market, agents, herd)
    h = perturbation_directions(p_star.t_grid, directions, seed)
    eps = epsilon * max(1.0, float(np.max(np.abs(p_star.values))))
    base = J(p_star.values)
    plus = J(p_star.values + eps * h)
    minus = J(p_star.values - eps * h)
    return base, plus, minus, eps


def first_variation_test(
    p_star: DecisionCurve,
    market: MarketParams,
    agents: Agents,
    herd: HerdConfig,
    directions: int = 100,
    epsilon: float = 1e-5,
    seed: int = 0,
) -> float:
    """Largest |dJ[p_star + e h]/de| at e = 0 over unit directions h (central differences)."""
    _, plus, minus, eps = _directional(p_star, market, agents, herd, directions, epsilon, seed)
    return float(np.max(np.abs(plus - minus) / (2 * eps)))


def second_variation_test(
    p_star: DecisionCurve,
    market: MarketParams,
    agents: Agents,
    herd: HerdConfig,
    directions: int = 100,
    epsilon: float = 1e-3,
    seed: int = 0,
) -> float:
    """Largest J(p + e h) + J(p - e h) - 2 J(p); negative means concave along every direction."""
    base, plus, minus, _ = _directional(p_star, market, agents, herd, directions, epsilon, seed)
    return float(np.max(plus + minus - 2 * base))


def brute_force_optimize(
    market: MarketParams,
    agents: Agents,
    herd: HerdConfig,
    coarse_n: int = 50,
    max_iter: int = 100_000,
    xtol: float = 1e-11,
    fd_step: float = 1e-6,
) -> DecisionCurve:
    """Maximise J over curves on a coarse grid, starting from zero.

    Steepest ascent in the L2 metric of the grid (raw gradient divided by the
    quadrature weights) with an Armijo backtracking line search; the gradient
    is estimated by central differences of J. Stops when the step falls below
    ``xtol`` relative to the curve scale, or when no ascent is measurable at
    machine precision.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations, with the best iterate on ``.last``.
    """
    if coarse_n > 200:
        raise ValueError(f"coarse_n must be <= 200, got {coarse_n}")
    t = time_grid(herd.T, coarse_n)
    J = _Objective(t, market, agents, herd)
    n = len(t)
    eye = np.eye(n)
    x = np.zeros(n)
    fx = float(J(x[None, :])[0])
    step = 1.0
    for it in range(1, max_iter + 1):
        eps = fd_step * max(1.0, float(np.max(np.abs(x))))
        both = J(np.vstack((x + eps * eye, x - eps * eye)))
        grad = (both[:n] - both[n:]) / (2 * eps)
        direction = grad / J.weights
        slope = float(grad @ direction)
        if slope <= 0.0:
            break
        step *= 2.0
        while True:
            cand = x + step * direction
            try:
                fc = float(J(cand[None, :])[0])
            except ModelRangeError:
                fc = -np.inf  # overshoot, shrink
            if fc >= fx + 1e-4 * step * slope:
                break
            step *= 0.5
            if step * np.max(np.abs(direction)) < 1e-16 * max(1.0, float(np.max(np.abs(x)))):
                return DecisionCurve(t, x)
        moved = step * float(np.max(np.abs(direction)))
        x, fx = cand, fc
        if moved < xtol * max(1.0, float(np.max(np.abs(x)))):
            return DecisionCurve(t, x)
    else:
        raise ConvergenceError(
            f"gradient ascent did not converge in {max_iter} iterations", last=DecisionCurve(t, x), iterations=max_iter
        )
    return DecisionCurve(t, x)
