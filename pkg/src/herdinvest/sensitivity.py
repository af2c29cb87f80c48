"""Finite-difference checks of the comparative statics of eta and Z.

Expected signs:

    dZ/dtheta < 0                                     always
    d eta/dx1 < 0, dZ/dx1 < 0                         always
    d eta/dv  < 0, dZ/dv  < 0      when 0 < alpha1/alpha2 < 2
    d eta/dsigma > 0, dZ/dsigma > 0  when |alpha1/alpha2 - 1| < 1/sqrt(3)

Signs are only asserted when the ratio condition holds; otherwise the
report carries the estimates with ``passed=None``. The sigma direction holds
theta fixed (vartheta moves with sigma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import HerdInvestError
from .herd import Agents, HerdConfig, Scenario, optimal_decision, solve_eta
from .merton import AgentProfile, DecisionCurve
from .opinion import OpinionCurve, investment_opinion

PARAMETERS = ("theta", "vartheta", "x1", "v", "sigma", "rho")
REL_STEP = 1e-4
ABS_STEP = 1e-6
SIGMA_BAND = 1.0 / math.sqrt(3.0)


def parameter_value(scenario: Scenario, parameter: str) -> float:
    m, ag, h = scenario.market, scenario.agents, scenario.herd
    return {
        "theta": lambda: h.theta,
        "vartheta": lambda: scenario.vartheta,
        "x1": lambda: ag.x1,
        "v": lambda: m.v,
        "sigma": lambda: m.sigma,
        "rho": lambda: h.rho,
    }[_check_param(parameter)]()


def with_parameter(scenario: Scenario, parameter: str, value: float) -> Scenario:
    """Copy of ``scenario`` with one parameter replaced; everything else held fixed."""
    m, ag, h = scenario.market, scenario.agents, scenario.herd
    parameter = _check_param(parameter)
    if parameter == "theta":
        return replace(scenario, herd=h.replace(theta=value))
    if parameter == "vartheta":
        return replace(scenario, herd=h.replace(theta=value * ag.alpha1 * m.sigma**2))
    if parameter == "x1":
        return replace(scenario, agents=Agents(AgentProfile(ag.alpha1, value), ag.a2))
    if parameter == "v":
        return replace(scenario, market=m.with_excess_return(value).require_valid())
    if parameter == "sigma":
        return replace(scenario, market=replace(m, sigma=value).require_valid())
    return replace(scenario, herd=h.replace(rho=value))


def _check_param(parameter: str) -> str:
    if parameter not in PARAMETERS:
        raise ValueError(f"unknown parameter {parameter!r}; expected one of {PARAMETERS}")
    return parameter


def hypothesis_holds(parameter: str, ratio: float) -> bool:
    """Whether the alpha1/alpha2 condition behind a sign statement is met."""
    if parameter == "v":
        return 0.0 < ratio < 2.0
    if parameter == "sigma":
        return abs(ratio - 1.0) < SIGMA_BAND
    return True


def default_step(value: float) -> float:
    return max(REL_STEP * abs(value), ABS_STEP)


def opinion_at(scenario: Scenario, eta: float, t_probe) -> np.ndarray:
    t = np.asarray(t_probe, dtype=float)
    q = eta * np.exp(scenario.herd.varrho * scenario.market.r * (scenario.herd.T - t))
    return q / (q + scenario.vartheta)


def _eta(scenario: Scenario) -> float:
    return solve_eta(scenario.market, scenario.agents, scenario.herd).eta


@dataclass(frozen=True, eq=False)
class SensitivityReport:
    parameter: str
    quantity: str
    base_value: float
    step: float
    probes: tuple[float, ...]
    derivatives: np.ndarray = field(repr=False)
    derivatives_half: np.ndarray = field(repr=False)
    expected_sign: int
    condition_met: bool

    @property
    def stable(self) -> bool:
        """Step halving preserves every sign."""
        return bool(np.all(np.sign(self.derivatives) == np.sign(self.derivatives_half)))

    @property
    def passed(self) -> bool | None:
        if not self.condition_met:
            return None
        ok = np.all(np.sign(self.derivatives) == self.expected_sign)
        return bool(ok and self.stable)


def _central(fun, scenario: Scenario, parameter: str, step: float) -> np.ndarray:
    x = parameter_value(scenario, parameter)
    hi = fun(with_parameter(scenario, parameter, x + step))
    lo = fun(with_parameter(scenario, parameter, x - step))
    return (np.atleast_1d(hi) - np.atleast_1d(lo)) / (2 * step)


def _report(fun, scenario, parameter, quantity, probes, step, sign, condition) -> SensitivityReport:
    base = parameter_value(scenario, parameter)
    step = default_step(base) if step is None else float(step)
    return SensitivityReport(
        parameter=parameter,
        quantity=quantity,
        base_value=base,
        step=step,
        probes=tuple(float(p) for p in probes),
        derivatives=_central(fun, scenario, parameter, step),
        derivatives_half=_central(fun, scenario, parameter, step / 2),
        expected_sign=sign,
        condition_met=condition,
    )


def sensitivity_theta(base: Scenario, t_probe, step: float | None = None) -> SensitivityReport:
    """dZ(t)/dtheta at each probe time; expected negative, unconditionally."""
    probes = np.atleast_1d(np.asarray(t_probe, dtype=float))
    return _report(lambda s: opinion_at(s, _eta(s), probes), base, "theta", "Z1", probes, step, -1, True)


_ETA_SIGNS = {"x1": -1, "v": -1, "sigma": +1}


def sensitivity_eta(base: Scenario, parameter: str, step: float | None = None) -> SensitivityReport:
    """d eta / d parameter for parameter in {x1, v, sigma}."""
    if parameter not in _ETA_SIGNS:
        raise ValueError(f"parameter must be one of {tuple(_ETA_SIGNS)}, got {parameter!r}")
    cond = hypothesis_holds(parameter, base.agents.ratio)
    return _report(_eta, base, parameter, "eta", (), step, _ETA_SIGNS[parameter], cond)


def sensitivity_opinion(base: Scenario, parameter: str, t_probe, step: float | None = None) -> SensitivityReport:
    """dZ(t)/d parameter for parameter in {x1, v, sigma}; same gates as the eta version."""
    if parameter not in _ETA_SIGNS:
        raise ValueError(f"parameter must be one of {tuple(_ETA_SIGNS)}, got {parameter!r}")
    probes = np.atleast_1d(np.asarray(t_probe, dtype=float))
    cond = hypothesis_holds(parameter, base.agents.ratio)
    return _report(
        lambda s: opinion_at(s, _eta(s), probes), base, parameter, "Z1", probes, step, _ETA_SIGNS[parameter], cond
    )


def sensitivity_vartheta(base: Scenario, step: float | None = None) -> SensitivityReport:
    """d eta / d vartheta, expected positive."""
    return _report(_eta, base, "vartheta", "eta", (), step, +1, True)


class SweepError(HerdInvestError):
    def __init__(self, parameter: str, value: float, cause: Exception):
        super().__init__(f"sweep of {parameter} failed at {value!r}: {cause}")
        self.parameter, self.value, self.cause = parameter, value, cause


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]
    fixed: Scenario
    t_probe: tuple[float, ...] = ()
    curves: bool = False

    def __post_init__(self):
        _check_param(self.parameter)
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t_probe", tuple(float(t) for t in self.t_probe))


@dataclass(frozen=True, eq=False)
class SweepRow:
    value: float
    eta: float
    eta_lower: float
    eta_upper: float
    method: str
    z_at_probes: np.ndarray = field(repr=False)
    decision: DecisionCurve | None = field(default=None, repr=False)
    opinion: OpinionCurve | None = field(default=None, repr=False)


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Solve the problem at each swept value, in ``spec.values`` order."""
    rows = []
    for value in spec.values:
        try:
            s = with_parameter(spec.fixed, spec.parameter, value)
            sol = solve_eta(s.market, s.agents, s.herd)
            z = opinion_at(s, sol.eta, spec.t_probe) if spec.t_probe else np.empty(0)
            dec = op = None
            if spec.curves:
                dec = optimal_decision(s.market, s.agents, s.herd, sol)
                op = investment_opinion(sol, s.herd, s.market, s.agents)
        except (HerdInvestError, ValueError, ArithmeticError) as exc:
            raise SweepError(spec.parameter, value, exc) from exc
        rows.append(SweepRow(value, sol.eta, sol.eta_lower, sol.eta_upper, sol.method, z, dec, op))
    return rows
