import numpy as np
import pytest

from herdinvest.herd import optimal_decision, solve_eta
from herdinvest.merton import DecisionCurve, cara_utility, expected_cara_utility, terminal_wealth_moments
from herdinvest.simulate import SimulationSpec, mc_expected_utility, simulate_wealth

from conftest import ALPHA1, R, T, make_scenario


@pytest.fixture(scope="module")
def optimum():
    s = make_scenario()
    return s, optimal_decision(s.market, s.agents, s.herd, solve_eta(s.market, s.agents, s.herd))


def test_spec_validation():
    for bad in (dict(n_paths=0, n_steps=10), dict(n_paths=10, n_steps=0), dict(n_paths=10, n_steps=10, scheme="milstein")):
        with pytest.raises(ValueError):
            SimulationSpec(**bad)


def test_zero_holding_is_riskless_growth(market, grid):
    zero = DecisionCurve(grid, np.zeros_like(grid))
    res = simulate_wealth(market, 1.0, zero, SimulationSpec(500, 1000, seed=3))
    dt = T / 1000
    assert res.mean_terminal_wealth == pytest.approx(np.exp(R * T), rel=R * T * R * dt)
    assert res.var_terminal_wealth == 0.0


def test_same_seed_same_paths(optimum):
    s, p = optimum
    spec = SimulationSpec(5000, 200, seed=11, block_size=512)
    a = simulate_wealth(s.market, 0.0, p, spec)
    b = simulate_wealth(s.market, 0.0, p, spec, workers=4)
    assert np.array_equal(a.terminal_samples, b.terminal_samples)
    c = simulate_wealth(s.market, 0.0, p, SimulationSpec(5000, 200, seed=12, block_size=512))
    assert not np.array_equal(a.terminal_samples, c.terminal_samples)


def test_keep_samples_off(optimum):
    s, p = optimum
    res = simulate_wealth(s.market, 0.0, p, SimulationSpec(100, 50, keep_samples=False))
    assert res.terminal_samples is None and res.n_paths == 100


def test_moments_within_three_standard_errors(optimum):
    s, p = optimum
    res = simulate_wealth(s.market, 0.0, p, SimulationSpec(40_000, 1000, seed=5), alpha=ALPHA1)
    mean, var = terminal_wealth_moments(s.market, 0.0, p)
    n = res.n_paths
    assert abs(res.mean_terminal_wealth - mean) <= 3 * np.sqrt(var / n)
    # variance of the sample variance for a Gaussian is 2 var^2 / (n-1)
    assert abs(res.var_terminal_wealth - var) <= 3 * var * np.sqrt(2 / (n - 1)) + 0.01 * var
    eu = expected_cara_utility(s.market, ALPHA1, 0.0, p)
    assert abs(res.mean_utility - eu) <= 3 * res.std_error_utility


def test_degenerate_samples_exact_utility(market, grid):
    zero = DecisionCurve(grid, np.zeros_like(grid))
    res = simulate_wealth(market, 2.0, zero, SimulationSpec(64, 100), alpha=0.5)
    u, se = mc_expected_utility(res, 0.5)
    assert se == 0.0
    assert u == pytest.approx(float(cara_utility(0.5, res.mean_terminal_wealth)), rel=1e-14)


def test_utility_for_other_alpha_reuses_samples(optimum):
    s, p = optimum
    res = simulate_wealth(s.market, 0.0, p, SimulationSpec(2000, 100, seed=1), alpha=ALPHA1)
    u, se = mc_expected_utility(res, 2 * ALPHA1)
    assert u == pytest.approx(float(np.mean(cara_utility(2 * ALPHA1, res.terminal_samples))), rel=1e-14)
    assert se > 0
    with pytest.raises(ValueError):
        mc_expected_utility(simulate_wealth(s.market, 0.0, p, SimulationSpec(10, 10, keep_samples=False)), 1.0)


def test_custom_normals_shape_checked(optimum):
    s, p = optimum
    with pytest.raises(ValueError):
        simulate_wealth(s.market, 0.0, p, SimulationSpec(10, 20), normals=np.zeros((10, 20)))


def test_weak_order_one_with_common_random_numbers(optimum):
    s, p = optimum
    n_paths, fine = 20_000, 1000
    z = np.random.default_rng(21).standard_normal((fine, n_paths))
    means = {}
    for n in (fine, fine // 2, fine // 4):
        k = fine // n
        coarse = z.reshape(n, k, n_paths).sum(axis=1) / np.sqrt(k)
        means[n] = simulate_wealth(s.market, 1.0, p, SimulationSpec(n_paths, n), normals=coarse).mean_terminal_wealth
    ratio = (means[250] - means[500]) / (means[500] - means[1000])
    assert ratio == pytest.approx(2.0, abs=0.3)
