import math

import numpy as np
import pytest

from delaywave import delays
from delaywave.delays import (CoefficientFunction, ConfigurationError,
                              DelayFunction, HistoryBuffer, HistoryError,
                              ShiftedDelay, VelocityHistorySeed)


# --- delay functions --------------------------------------------------

def test_constant_delay():
    df = DelayFunction(kind="constant", bound=0.5, value=0.5)
    assert delays.tau_eval(df, 3.0) == 0.5


def test_vanishing_delay_at_zero():
    df = DelayFunction(kind="vanishing", bound=1.0, rate=1.0)
    assert df(0.0) == pytest.approx(1.0)
    assert df(2.0) == pytest.approx(math.exp(-2.0))


def test_sinusoidal_degenerate():
    df = DelayFunction(kind="sinusoidal", bound=1.0, frequency=1.0,
                       phase=-math.pi / 2)
    assert df(0.0) == pytest.approx(0.0, abs=1e-15)
    assert df(math.pi) == pytest.approx(1.0)


def test_table_delay_bound_violation():
    with pytest.raises(ConfigurationError):
        DelayFunction(kind="table", bound=0.5, times=[0.0, 1.0],
                      values=[0.2, 0.7])


def test_shifted_delay():
    base = DelayFunction(kind="constant", bound=0.5, value=0.5)
    sh = ShiftedDelay(base, 0.1)
    assert sh(2.0) == pytest.approx(0.6)
    assert sh.bound == pytest.approx(0.6)


# --- coefficient functions --------------------------------------------

def test_window_integral_constant():
    cf = CoefficientFunction(kind="constant", value=0.2)
    assert delays.k_window_integral(cf, 3.0, 0.5) == pytest.approx(0.1)
    zero = CoefficientFunction(kind="constant", value=0.0)
    assert delays.k_window_integral(zero, 3.0, 0.5) == 0.0


def test_window_integral_exp():
    # integral of e^{-s} over [0, 1] = 1 - 1/e
    cf = CoefficientFunction(kind="exp", amplitude=1.0, rate=1.0)
    assert delays.k_window_integral(cf, 1.0, 1.0) == pytest.approx(
        1.0 - math.exp(-1.0), rel=1e-12)


def test_cumulative_integral():
    cf = CoefficientFunction(kind="constant", value=0.2)
    assert delays.k_cumulative_integral(cf, 5.0) == pytest.approx(1.0)
    assert delays.k_cumulative_integral(cf, 0.0) == 0.0
    ef = CoefficientFunction(kind="exp", amplitude=1.0, rate=1.0)
    assert ef.l1_norm() == pytest.approx(1.0)


def test_table_integral_vs_quadrature():
    cf = CoefficientFunction(kind="table", times=[0.0, 1.0, 2.0],
                             values=[0.1, -0.3, 0.2])
    # additivity within quad tolerance
    whole = cf.abs_integral(0.0, 2.0)
    parts = cf.abs_integral(0.0, 1.0) + cf.abs_integral(1.0, 2.0)
    assert whole == pytest.approx(parts, rel=1e-8)


def test_cumulative_additivity_closed_form():
    cf = CoefficientFunction(kind="exp", amplitude=0.3, rate=0.7)
    lhs = cf.cumulative_integral(4.0) - cf.cumulative_integral(1.5)
    assert lhs == pytest.approx(cf.abs_integral(1.5, 4.0), rel=1e-8)


# --- history buffer ---------------------------------------------------

def _seed(model_pi, value=0.0):
    return VelocityHistorySeed(model_pi, kind="constant", value=value)


def test_history_seed_segment(model_pi):
    hb = HistoryBuffer(_seed(model_pi, 2.0), tau_bar=0.5, dt=0.1)
    out = hb.eval(-0.25)
    assert np.allclose(out, 2.0 * model_pi.delay_mask)


def test_history_before_segment_errors(model_pi):
    hb = HistoryBuffer(_seed(model_pi), tau_bar=0.5, dt=0.1)
    with pytest.raises(HistoryError):
        hb.eval(-0.7)


def test_history_linear_midpoint(model_pi):
    hb = HistoryBuffer(_seed(model_pi), tau_bar=0.5, dt=0.1)
    w0 = np.full(model_pi.n_quad, 1.0)
    w1 = np.full(model_pi.n_quad, 3.0)
    hb.push(0.1, w0)
    hb.push(0.2, w1)
    assert np.allclose(hb.eval(0.15), 2.0)


def test_history_convex_hull(model_pi):
    rng = np.random.default_rng(0)
    hb = HistoryBuffer(_seed(model_pi), tau_bar=0.5, dt=0.1)
    w0 = rng.standard_normal(model_pi.n_quad)
    w1 = rng.standard_normal(model_pi.n_quad)
    hb.push(0.1, w0)
    hb.push(0.2, w1)
    out = hb.eval(0.13)
    lo = np.minimum(w0, w1) - 1e-15
    hi = np.maximum(w0, w1) + 1e-15
    assert np.all(out >= lo) and np.all(out <= hi)


def test_history_explicit_lag(model_pi):
    # query at/past the newest completed sample returns that sample
    hb = HistoryBuffer(_seed(model_pi), tau_bar=0.5, dt=0.1)
    w = np.full(model_pi.n_quad, 5.0)
    hb.push(0.1, w)
    assert np.allclose(hb.eval(0.1), 5.0)
    assert np.allclose(hb.eval(0.15), 5.0)  # inside the current step
    with pytest.raises(HistoryError):
        hb.eval(0.25)  # more than one step ahead


def test_history_zero_everywhere(model_pi):
    hb = HistoryBuffer(_seed(model_pi, 0.0), tau_bar=0.5, dt=0.1)
    assert np.all(hb.eval(-0.3) == 0.0)
    assert np.all(hb.eval(0.0) == 0.0)


def test_history_retention(model_pi):
    hb = HistoryBuffer(_seed(model_pi), tau_bar=0.3, dt=0.01)
    for i in range(6000):
        hb.push(i * 0.01 + 0.01, np.full(4, float(i)))
    newest = hb.newest_time()
    for s in np.linspace(newest - 0.3, newest, 20):
        hb.eval(s)  # must not raise


def test_history_timestamps_strictly_increase(model_pi):
    hb = HistoryBuffer(_seed(model_pi), tau_bar=0.5, dt=0.1)
    hb.push(0.1, np.zeros(4))
    with pytest.raises(ValueError):
        hb.push(0.1, np.zeros(4))


# --- seed -------------------------------------------------------------

def test_seed_table_continuity(model_pi):
    g = VelocityHistorySeed(model_pi, kind="table", times=[-0.5, 0.0],
                            values=[1.0, 3.0])
    assert g.amplitude(-0.25) == pytest.approx(2.0)
    # constant extrapolation outside the table
    assert g.amplitude(-0.8) == pytest.approx(1.0)


def test_seed_w2_norm(model_pi):
    g = VelocityHistorySeed(model_pi, kind="constant", value=2.0)
    # full-domain mask: ||g|| = 2 sqrt(L)
    assert g.w2_norm(-0.1) == pytest.approx(2.0 * math.sqrt(math.pi), rel=1e-6)
