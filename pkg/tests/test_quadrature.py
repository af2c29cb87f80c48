import numpy as np
import pytest
from scipy.integrate import simpson as scipy_simpson

from herdinvest.exceptions import ModelRangeError
from herdinvest.quadrature import checked_exp, even_intervals, simpson, simpson_weights, time_grid


def test_odd_interval_count_is_refined():
    assert even_intervals(999) == 1000
    assert len(time_grid(50.0, 999)) == 1001


def test_grid_endpoints():
    t = time_grid(50.0, 1000)
    assert t[0] == 0.0 and t[-1] == 50.0
    assert np.allclose(np.diff(t), 0.05)


def test_weights_integrate_constants_exactly():
    w = simpson_weights(10, 0.3)
    assert w.sum() == pytest.approx(3.0, rel=1e-15)


@pytest.mark.parametrize("f", [np.exp, np.sin, lambda t: t**3 - 2 * t])
def test_matches_scipy_simpson(f):
    t = np.linspace(0.0, 2.0, 41)
    assert simpson(f(t), t) == pytest.approx(scipy_simpson(f(t), x=t), rel=1e-13)


def test_fourth_order_convergence():
    errs = []
    for n in (20, 40, 80):
        t = np.linspace(0.0, 1.0, n + 1)
        errs.append(abs(simpson(np.exp(3 * t), t) - (np.exp(3) - 1) / 3))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.8)


def test_rejects_odd_weights_and_nonuniform_grid():
    with pytest.raises(ValueError):
        simpson_weights(7, 0.1)
    with pytest.raises(ValueError):
        simpson(np.ones(4), np.array([0.0, 0.1, 0.3, 0.4]))


def test_checked_exp_refuses_overflow():
    with pytest.raises(ModelRangeError):
        checked_exp(701.0)
    assert checked_exp(1.0) == pytest.approx(np.e)
