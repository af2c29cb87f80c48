"""Optimal investment with herd behaviour.

A following agent with CARA utility tilts their Merton allocation toward a
leading expert's. This package solves for the optimal holding, decomposes it
into the two agents' rational decisions, and checks the result against
independent numerical oracles.
"""

from .exceptions import ConfigError, ConvergenceError, HerdInvestError, MarketAssumptionError, ModelRangeError
from .herd import (
    Agents,
    EtaSolution,
    HerdConfig,
    Scenario,
    check_contraction,
    eta_bounds,
    iteration_map,
    optimal_decision,
    solve,
    solve_eta,
)
from .market import MarketParams, PriceSeries, estimate_gbm_params, read_price_csv, validate_market
from .merton import (
    AgentProfile,
    DecisionCurve,
    cara_utility,
    expected_cara_utility,
    rational_decision,
    terminal_wealth_moments,
)
from .opinion import (
    OpinionCurve,
    decompose,
    equivalence_lambda,
    integrate_opinion_ode,
    investment_opinion,
    opinion_ode_rhs,
    recompose,
)

__version__ = "0.1.0"
