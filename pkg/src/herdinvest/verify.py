"""Bundle of numerical checks run by ``herdinvest verify``.

Each check records the measured quantity next to its tolerance; a check
that raises is reported as failed without stopping the others.
"""

from __future__ import annotations

import logging
import math
import traceback
from dataclasses import asdict, dataclass

import numpy as np

from .herd import Scenario, optimal_decision, solve_eta
from .merton import expected_cara_utility, rational_decision
from .objective import (
    average_deviation,
    brute_force_optimize,
    first_variation_test,
    perturbation_directions,
    second_variation_test,
)
from .opinion import (
    OpinionCurve,
    decompose,
    equivalence_lambda,
    integrate_opinion_ode,
    investment_opinion,
    opinion_penalty,
    recompose,
)
from .simulate import SimulationSpec, simulate_wealth

log = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<22} value={self.value:.3e}  tol={self.tolerance:.1e}  {self.detail}"


def run_verification(
    scenario: Scenario,
    n_paths: int = 100_000,
    seed: int = 0,
    eta_override: float | None = None,
    coarse_n: int = 50,
) -> list[CheckResult]:
    """Run every check on ``scenario``.

    ``eta_override`` replaces the solved integral constant (used to confirm
    that the checks reject a non-optimal curve).
    """
    m, ag, h = scenario.market, scenario.agents, scenario.herd
    t = h.grid()
    sol = solve_eta(m, ag, h)
    eta = sol.eta if eta_override is None else float(eta_override)
    p_star = optimal_decision(m, ag, h, eta, t)
    p1 = rational_decision(m, ag.alpha1, h.T, t)
    p2 = rational_decision(m, ag.alpha2, h.T, t)

    def eta_check():
        other = solve_eta(m, ag, h, "bisection" if sol.method == "fixed-point" else "fixed-point")
        gap = abs(other.eta - sol.eta)
        ok = sol.residual <= h.tol and sol.eta_lower <= sol.eta <= sol.eta_upper and gap <= 10 * h.tol
        return CheckResult("eta_fixed_point", ok, sol.residual, h.tol, f"method={sol.method} path_gap={gap:.2e}")

    def first_variation():
        d = first_variation_test(p_star, m, ag, h, directions=100)
        return CheckResult("first_variation", d <= 1e-6, d, 1e-6, "max |dJ/de| over 100 directions")

    def second_variation():
        d = second_variation_test(p_star, m, ag, h, directions=100)
        return CheckResult("second_variation", d < 0, d, 0.0, "max J(p+eh)+J(p-eh)-2J(p)")

    def oracle():
        bf = brute_force_optimize(m, ag, h, coarse_n=coarse_n)
        ref = optimal_decision(m, ag, h, eta, bf.t_grid)
        err = float(np.max(np.abs(bf.values - ref.values)))
        return CheckResult("brute_force_oracle", err <= 1e-3, err, 1e-3, f"coarse_n={coarse_n}")

    def decomposition():
        if ag.alpha1 == ag.alpha2:
            err = float(np.max(np.abs(p_star.values - p1.values)))
            return CheckResult("decomposition", err <= 1e-10, err, 1e-10, "alpha1 == alpha2: P1* == P_bar")
        z = investment_opinion(eta, h, m, ag, t)
        dz = decompose(p_star, p1, p2)
        err = float(np.max(np.abs(dz.values - z.values)))
        back = float(np.max(np.abs(recompose(dz, p1, p2).values - p_star.values)))
        ok = err <= 1e-10 and back <= 1e-12 * max(1.0, float(np.max(np.abs(p_star.values)))) and z.in_open_range
        return CheckResult("decomposition", ok, err, 1e-10, f"round_trip={back:.2e}")

    def ode():
        z = investment_opinion(eta, h, m, ag, t)
        zo = integrate_opinion_ode(float(z.values[-1]), h, m, t)
        err = float(np.max(np.abs(zo.values - z.values)))
        dt = t[1] - t[0]
        dz = (z.values[2:] - z.values[:-2]) / (2 * dt)
        resid = float(np.max(np.abs(dz + h.varrho * m.r * z.values[1:-1] * (1 - z.values[1:-1]))))
        return CheckResult("opinion_ode", err <= 1e-8 and resid <= 1e-6, err, 1e-8, f"closed_form_residual={resid:.2e}")

    def equivalence():
        lam = equivalence_lambda(m, ag, h)
        if lam == 0:
            return CheckResult("equivalence_lambda", True, 0.0, 1e-8, "alpha1 == alpha2: lambda = 0")
        worst = 0.0
        for k, shape in enumerate(perturbation_directions(t, 20, seed=seed + 7)):
            z = OpinionCurve(t, 0.5 + 0.45 * shape)
            ratio = h.theta * average_deviation(recompose(z, p1, p2), p2, h.rho, m.r, h.T) / opinion_penalty(z, h, m)
            worst = max(worst, abs(ratio / lam - 1))
        return CheckResult("equivalence_lambda", worst <= 1e-8, worst, 1e-8, f"lambda={lam:.6e}")

    def monte_carlo():
        res = simulate_wealth(m, ag.x1, p_star, SimulationSpec(n_paths, h.grid_n, seed), alpha=ag.alpha1)
        exact = expected_cara_utility(m, ag.alpha1, ag.x1, p_star)
        z = abs(res.mean_utility - exact) / res.std_error_utility
        return CheckResult("monte_carlo", z <= 3.0, z, 3.0, f"paths={n_paths} seed={seed} (|z| in std errors)")

    results = []
    for check in (eta_check, first_variation, second_variation, oracle, decomposition, ode, equivalence, monte_carlo):
        try:
            results.append(check())
        except Exception as exc:  # each check is isolated
            log.debug("check %s crashed:\n%s", check.__name__, traceback.format_exc())
            results.append(CheckResult(check.__name__, False, math.nan, math.nan, f"error: {exc}"))
    return results


def report(results: list[CheckResult]) -> dict:
    return {"passed": all(r.passed for r in results), "checks": [asdict(r) for r in results]}
