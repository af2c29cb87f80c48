import numpy as np
import pytest

from herdinvest.herd import optimal_decision, solve_eta
from herdinvest.merton import rational_decision
from herdinvest.objective import average_deviation, perturbation_directions
from herdinvest.opinion import (
    OpinionCurve,
    decompose,
    equivalence_lambda,
    integrate_opinion_ode,
    investment_opinion,
    opinion_ode_rhs,
    opinion_penalty,
    recompose,
)

from conftest import ALPHA1, ALPHA2, SIGMA, T, make_scenario


def _solved(vartheta=1 / 400, rho=0.0, **kw):
    s = make_scenario(vartheta, rho, **kw)
    sol = solve_eta(s.market, s.agents, s.herd)
    t = s.grid()
    return s, sol, t


def _rationals(s, t):
    return (
        rational_decision(s.market, s.agents.alpha1, T, t),
        rational_decision(s.market, s.agents.alpha2, T, t),
    )


def test_terminal_value():
    s, sol, t = _solved()
    z = investment_opinion(sol, s.herd, s.market, s.agents, t)
    assert z.values[-1] == pytest.approx(sol.eta / (sol.eta + 1 / 400), rel=1e-14)
    assert z.in_open_range


def test_constant_when_rho_two():
    s, sol, t = _solved(rho=2.0)
    z = investment_opinion(sol, s.herd, s.market, s.agents, t).values
    assert np.ptp(z) == 0.0


@pytest.mark.parametrize("rho, sign", [(0.0, -1), (1.0, -1), (2.0, 0), (3.0, 1), (4.0, 1)])
def test_monotonicity_trichotomy(rho, sign):
    s, sol, t = _solved(1 / 100, rho)
    dz = np.diff(investment_opinion(sol, s.herd, s.market, s.agents, t).values)
    if sign == 0:
        assert np.all(dz == 0)
    else:
        assert np.all(np.sign(dz) == sign)


@pytest.mark.parametrize("rho", [0.0, 2.0, 4.0])
def test_decompose_recovers_closed_form(rho):
    s, sol, t = _solved(1 / 400, rho)
    p1, p2 = _rationals(s, t)
    p_star = optimal_decision(s.market, s.agents, s.herd, sol, t)
    z = investment_opinion(sol, s.herd, s.market, s.agents, t)
    dz = decompose(p_star, p1, p2)
    assert np.max(np.abs(dz.values - z.values)) <= 1e-10
    back = recompose(z, p1, p2)
    assert np.max(np.abs(back.values - p_star.values)) <= 1e-10


def test_decompose_boundaries_are_flagged():
    s, _, t = _solved()
    p1, p2 = _rationals(s, t)
    one = decompose(p1, p1, p2)
    zero = decompose(p2, p1, p2)
    assert np.allclose(one.values, 1.0, rtol=0, atol=1e-15) and not one.in_open_range
    assert np.all(zero.values == 0.0) and not zero.in_open_range


def test_decompose_degenerate_alphas():
    s, _, t = _solved(alpha2=ALPHA1)
    p1, p2 = _rationals(s, t)
    with pytest.raises(ValueError, match="undefined"):
        decompose(p1, p1, p2)


def test_recompose_extremes():
    s, _, t = _solved()
    p1, p2 = _rationals(s, t)
    assert np.array_equal(recompose(OpinionCurve(t, np.ones_like(t)), p1, p2).values, p1.values)
    assert np.array_equal(recompose(OpinionCurve(t, np.zeros_like(t)), p1, p2).values, p2.values)


def test_round_trips_are_identities():
    s, _, t = _solved()
    p1, p2 = _rationals(s, t)
    rng = np.random.default_rng(4)
    z = OpinionCurve(t, rng.uniform(0.05, 0.95, t.size))
    p = recompose(z, p1, p2)
    assert np.max(np.abs(decompose(p, p1, p2).values - z.values)) <= 1e-12
    assert np.max(np.abs(recompose(decompose(p, p1, p2), p1, p2).values - p.values)) <= 1e-12


def test_rhs_values():
    s = make_scenario(rho=0.0)
    assert opinion_ode_rhs(0.0, s.herd, s.market) == 0.0
    assert opinion_ode_rhs(1.0, s.herd, s.market) == 0.0
    assert opinion_ode_rhs(0.5, s.herd, s.market) == pytest.approx(-0.02, rel=1e-15)
    s2 = make_scenario(rho=2.0)
    assert np.all(opinion_ode_rhs(np.linspace(0, 1, 11), s2.herd, s2.market) == 0.0)


@pytest.mark.parametrize("rho", [0.0, 2.0, 4.0])
def test_backward_rk4_matches_closed_form(rho):
    s, sol, t = _solved(1 / 400, rho)
    z = investment_opinion(sol, s.herd, s.market, s.agents, t)
    zo = integrate_opinion_ode(float(z.values[-1]), s.herd, s.market, t)
    assert np.max(np.abs(zo.values - z.values)) <= 1e-8
    if rho == 2.0:
        assert np.all(zo.values == z.values[-1])


def test_rk4_mid_range_terminal():
    # a terminal value near 1/2 exercises the nonlinearity far more than the reference case
    s = make_scenario(rho=0.0)
    eta, vt = 1.0, 1.0
    t = s.grid()
    q = eta * np.exp(s.herd.varrho * s.market.r * (T - t))
    zo = integrate_opinion_ode(0.5, s.herd, s.market, t)
    assert np.max(np.abs(zo.values - q / (q + vt))) <= 1e-8


def test_rk4_rejects_bad_terminal():
    s = make_scenario()
    with pytest.raises(ValueError):
        integrate_opinion_ode(1.0, s.herd, s.market)


@pytest.mark.parametrize("rho", [0.0, 2.0, 4.0])
def test_closed_form_satisfies_ode(rho):
    s, sol, t = _solved(1 / 100, rho)
    z = investment_opinion(sol, s.herd, s.market, s.agents, t).values
    dz = (z[2:] - z[:-2]) / (2 * (t[1] - t[0]))
    resid = dz - opinion_ode_rhs(z[1:-1], s.herd, s.market)
    assert np.max(np.abs(resid)) <= 1e-6


def test_lambda_reference_value():
    s = make_scenario(1 / 100, 0.0)
    lam = equivalence_lambda(s.market, s.agents, s.herd)
    theta = ALPHA1 * SIGMA**2 / 100
    assert lam == pytest.approx(theta * 0.03**2 * 0.2**2 / (ALPHA1**2 * ALPHA2**2 * SIGMA**4), rel=1e-14)
    assert lam == pytest.approx(3.892734e-4, rel=1e-6)


def test_lambda_zero_and_linear():
    s = make_scenario(alpha2=ALPHA1)
    assert equivalence_lambda(s.market, s.agents, s.herd) == 0.0
    a = make_scenario(1 / 100)
    b = make_scenario(2 / 100)
    ratio = equivalence_lambda(b.market, b.agents, b.herd) / equivalence_lambda(a.market, a.agents, a.herd)
    assert ratio == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("rho", [0.0, 1.0, 2.0, 4.0])
def test_ratio_identity_for_random_opinions(rho):
    s, _, t = _solved(1 / 100, rho)
    p1, p2 = _rationals(s, t)
    lam = equivalence_lambda(s.market, s.agents, s.herd)
    for shape in perturbation_directions(t, 20, seed=3):
        z = OpinionCurve(t, 0.5 + 0.45 * shape)
        dev = average_deviation(recompose(z, p1, p2), p2, s.herd.rho, s.market.r, T)
        assert s.herd.theta * dev / opinion_penalty(z, s.herd, s.market) == pytest.approx(lam, rel=1e-8)
