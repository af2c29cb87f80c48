"""Euler-Maruyama simulation of the wealth SDE

    dX = (r X + v P(t)) dt + sigma P(t) dW

under a deterministic holding curve, and Monte Carlo utility estimates.

Paths are generated in fixed blocks of ``block_size``; block ``b`` draws from
``SeedSequence(seed, spawn_key=(b,))``. A path's normals therefore depend
only on (seed, path index), never on how blocks are scheduled, and the
terminal samples are always assembled in path order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .market import MarketParams
from .merton import DecisionCurve, cara_utility

DEFAULT_BLOCK = 2048


@dataclass(frozen=True)
class SimulationSpec:
    n_paths: int
    n_steps: int
    seed: int = 0
    block_size: int = DEFAULT_BLOCK
    keep_samples: bool = True
    scheme: str = "euler-maruyama"

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.scheme != "euler-maruyama":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


@dataclass(frozen=True, eq=False)
class SimulationResult:
    mean_terminal_wealth: float
    var_terminal_wealth: float
    n_paths: int
    mean_utility: float | None = None
    std_error_utility: float | None = None
    terminal_samples: np.ndarray | None = field(default=None, repr=False)


def _holding_on(decision: DecisionCurve, n_steps: int) -> np.ndarray:
    t = np.linspace(0.0, decision.T, n_steps + 1)[:-1]
    if decision.n == n_steps:
        return decision.values[:-1]
    return np.interp(t, decision.t_grid, decision.values)


def _block_normals(seed: int, block: int, n_steps: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    return rng.standard_normal((n_steps, size))


def _run_block(market, x0, holding, dt, normals):
    drift = market.v * holding * dt
    vol = market.sigma * holding * math.sqrt(dt)
    x = np.full(normals.shape[1], float(x0))
    growth = 1.0 + market.r * dt
    for k in range(len(holding)):
        x = x * growth + drift[k] + vol[k] * normals[k]
    return x


def simulate_wealth(
    market: MarketParams,
    x0: float,
    decision: DecisionCurve,
    spec: SimulationSpec,
    alpha: float | None = None,
    workers: int = 1,
    normals: np.ndarray | None = None,
) -> SimulationResult:
    """Simulate terminal wealth X(T) for ``spec.n_paths`` paths.

    The holding is read at left endpoints and linearly interpolated when the
    curve's grid differs from ``spec.n_steps``. ``normals`` (shape
    ``(n_steps, n_paths)``) replaces the internal generator, e.g. for common
    random numbers across step sizes. With ``alpha`` the CARA utility
    estimate is filled in as well.
    """
    holding = _holding_on(decision, spec.n_steps)
    dt = decision.T / spec.n_steps
    if normals is not None:
        normals = np.asarray(normals, dtype=float)
        if normals.shape != (spec.n_steps, spec.n_paths):
            raise ValueError(f"normals must have shape {(spec.n_steps, spec.n_paths)}, got {normals.shape}")
        x = _run_block(market, x0, holding, dt, normals)
    else:
        bounds = [
            (b, min(spec.block_size, spec.n_paths - b * spec.block_size))
            for b in range(math.ceil(spec.n_paths / spec.block_size))
        ]

        def job(item):
            b, size = item
            return _run_block(market, x0, holding, dt, _block_normals(spec.seed, b, spec.n_steps, size))

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(job, bounds))
        else:
            parts = [job(item) for item in bounds]
        x = np.concatenate(parts)

    # shifting by one sample keeps identical paths at exactly zero variance
    var = float(np.var(x - x[0], ddof=1)) if x.size > 1 else 0.0
    mean_u = se_u = None
    if alpha is not None:
        mean_u, se_u = _utility_stats(x, alpha)
    return SimulationResult(
        mean_terminal_wealth=float(np.mean(x)),
        var_terminal_wealth=var,
        n_paths=int(x.size),
        mean_utility=mean_u,
        std_error_utility=se_u,
        terminal_samples=x if spec.keep_samples else None,
    )


def _utility_stats(samples: np.ndarray, alpha: float) -> tuple[float, float]:
    u = cara_utility(alpha, samples)
    se = float(np.std(u - u[0], ddof=1) / math.sqrt(u.size)) if u.size > 1 else 0.0
    return float(np.mean(u)), se


def mc_expected_utility(result: SimulationResult, alpha: float) -> tuple[float, float]:
    """Sample mean of -(1/alpha) exp(-alpha X(T)) and its standard error."""
    if result.terminal_samples is None:
        raise ValueError("terminal samples were not retained (keep_samples=False)")
    return _utility_stats(result.terminal_samples, alpha)
