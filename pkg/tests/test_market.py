import datetime as dt
import math

import numpy as np
import pytest

from herdinvest.exceptions import DataFormatError, MarketAssumptionError
from herdinvest.market import (
    MarketParams,
    PriceSeries,
    estimate_gbm_params,
    read_price_csv,
    simulate_gbm_prices,
    validate_market,
    write_price_csv,
)


def test_reference_market_is_valid():
    res = validate_market(MarketParams(0.04, 0.07, 0.17))
    assert res.ok and res.violations == ()


def test_zero_excess_return_invalid():
    res = validate_market(MarketParams(0.05, 0.05, 0.2))
    assert not res.ok
    assert res.violations == ("v ≤ 0",)


def test_zero_volatility_invalid():
    res = validate_market(MarketParams(0.04, 0.07, 0.0))
    assert res.violations == ("sigma ≤ 0",)


def test_both_violations_listed():
    assert len(validate_market(MarketParams(0.1, 0.05, -1)).violations) == 2


def test_v_is_derived():
    m = MarketParams(0.04, 0.07, 0.17)
    assert m.v == pytest.approx(0.03, abs=1e-16)
    assert m.with_excess_return(0.05).mu == pytest.approx(0.09)


def test_gbm_estimator_recovers_parameters():
    series = simulate_gbm_prices(0.07, 0.17, 12600, seed=2024)
    est = estimate_gbm_params(series, r=0.04)
    assert abs(est.sigma - 0.17) <= 0.005
    assert abs(est.mu - 0.07) <= 0.03


def test_estimator_matches_direct_formula():
    series = simulate_gbm_prices(0.09, 0.2, 500, seed=1)
    x = np.diff(np.log(series.closes))
    s = np.sqrt(np.sum((x - x.mean()) ** 2) / (len(x) - 1)) / np.sqrt(series.dt)
    m = x.mean() / series.dt + s**2 / 2
    est = estimate_gbm_params(series, -10.0)
    assert est.sigma == pytest.approx(s, rel=1e-12)
    assert est.mu == pytest.approx(m, rel=1e-12)


def test_estimator_deterministic():
    series = simulate_gbm_prices(0.07, 0.17, 300, seed=3)
    assert estimate_gbm_params(series, -10.0) == estimate_gbm_params(series, -10.0)


@pytest.mark.parametrize("n", [1_000, 10_000, 100_000])
def test_estimator_consistency_three_sigma(n):
    dt_ = 1 / 252
    est = estimate_gbm_params(simulate_gbm_prices(0.07, 0.17, n, seed=n), -10.0)
    years = n * dt_
    assert abs(est.mu - 0.07) <= 3 * 0.17 / math.sqrt(years)
    assert abs(est.sigma - 0.17) <= 3 * 0.17 / math.sqrt(2 * n)


def _dates(n):
    return tuple(dt.date(2020, 1, 1) + dt.timedelta(days=i) for i in range(n))


def test_constant_prices_rejected():
    with pytest.raises(MarketAssumptionError):
        estimate_gbm_params(PriceSeries(_dates(5), np.full(5, 100.0)), 0.04)


def test_two_point_series_rejected():
    # one log return cannot give a sample variance
    with pytest.raises(ValueError):
        estimate_gbm_params(PriceSeries(_dates(2), [100.0, 100.0 * math.exp(0.0004)]), 0.04)


def test_price_series_invariants():
    with pytest.raises(ValueError):
        PriceSeries(_dates(3), [1.0, -1.0, 2.0])
    with pytest.raises(ValueError):
        PriceSeries(_dates(3)[::-1], [1.0, 1.0, 2.0])


def test_csv_round_trip(tmp_path):
    series = simulate_gbm_prices(0.07, 0.17, 50, seed=0)
    path = tmp_path / "p.csv"
    write_price_csv(series, path)
    back = read_price_csv(path)
    assert back.timestamps == series.timestamps
    assert np.array_equal(back.closes, series.closes)


@pytest.mark.parametrize(
    "body, line",
    [
        ("date,close\n2020-01-01,1\n2020-01-02,x\n2020-01-03,2\n", 3),
        ("date,close\n2020-01-01,1\n2020-13-02,1\n2020-01-03,2\n", 3),
        ("date,close\n2020-01-02,1\n2020-01-01,1\n2020-01-03,2\n", 3),
        ("date,close\n2020-01-01,1\n2020-01-02,1\n2020-01-03,0\n", 4),
        ("day,price\n2020-01-01,1\n", 1),
    ],
)
def test_csv_errors_report_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DataFormatError) as err:
        read_price_csv(path)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)
