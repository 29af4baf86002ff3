"""Estimation, order selection and forecasting checks against simulation and
closed-form oracles."""

import math

import numpy as np
import pytest

from epiforecast import arima, metrics
from epiforecast.arima import ArimaOrder, fit_arima, forecast_arima, forecast_transformed, select_order
from epiforecast.series import LOG_TRANSFORM, diff_values

from conftest import make_series


def sim_ar1(seed, n=500, phi=0.7):
    rng = np.random.default_rng(seed)
    e = rng.normal(size=n)
    y = np.zeros(n)
    for t in range(1, n):
        y[t] = phi * y[t - 1] + e[t]
    return y


def sim_ma1(seed, n=500, theta=0.8):
    # model convention: w_t = eps_t - theta * eps_{t-1}
    rng = np.random.default_rng(seed)
    eps = rng.normal(size=n + 1)
    return eps[1:] - theta * eps[:-1]


class TestFit:
    def test_ar1_recovery_single_seed(self):
        fit = fit_arima(sim_ar1(42), ArimaOrder(1, 0, 0))
        assert abs(fit.phi[0] - 0.7) < 0.1

    def test_degenerate_model_matches_moments(self):
        rng = np.random.default_rng(3)
        x = rng.normal(loc=5.0, scale=2.0, size=400)
        fit = fit_arima(x, ArimaOrder(0, 0, 0))
        assert fit.intercept == pytest.approx(x.mean(), abs=0.01)
        assert fit.sigma2 == pytest.approx(x.var(), rel=0.02)

    def test_information_criteria_identity(self):
        fit = fit_arima(sim_ar1(1), ArimaOrder(1, 0, 1))
        k = fit.k_params
        n_eff = len(diff_values(fit.transformed, fit.order.d)) - fit.order.p
        assert fit.aic == pytest.approx(-2 * fit.loglik + 2 * k, rel=1e-12)
        assert fit.bic == pytest.approx(-2 * fit.loglik + k * math.log(n_eff), rel=1e-12)

    def test_residuals_reconstruct_differenced_series(self):
        fit = fit_arima(sim_ar1(7), ArimaOrder(2, 0, 1))
        w = diff_values(fit.transformed, fit.order.d)
        np.testing.assert_array_equal(fit.fitted, w - fit.residuals)
        np.testing.assert_allclose(fit.fitted + fit.residuals, w, atol=1e-12)

    def test_residual_mean_near_zero_on_well_specified_model(self):
        fit = fit_arima(sim_ar1(11), ArimaOrder(1, 0, 0))
        resid = fit.residuals[fit.order.p:]
        bound = 3 * resid.std() / np.sqrt(len(resid))
        assert abs(resid.mean()) < bound

    def test_roots_outside_unit_circle(self):
        for seed in (0, 5):
            fit = fit_arima(sim_ma1(seed), ArimaOrder(1, 0, 1))
            assert arima._min_root_modulus(fit.phi) > 1.0
            assert arima._min_root_modulus(fit.theta) > 1.0

    def test_too_short_series_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            fit_arima(np.ones(8), ArimaOrder(3, 0, 3))

    def test_parameter_recovery_batch(self):
        ar_miss = sum(
            abs(fit_arima(sim_ar1(seed), ArimaOrder(1, 0, 0)).phi[0] - 0.7) > 0.1
            for seed in range(20)
        )
        ma_miss = sum(
            abs(fit_arima(sim_ma1(seed), ArimaOrder(0, 0, 1)).theta[0] - 0.8) > 0.1
            for seed in range(20)
        )
        assert ar_miss <= 2
        assert ma_miss <= 2

    def test_india_stated_order_rmse_band(self, country_series):
        s = country_series["india"]
        fit = fit_arima(s, ArimaOrder(1, 2, 1), LOG_TRANSFORM)
        rmse = metrics.rmse(s.values, fit.fitted_level())
        assert 50.83 * 0.75 <= rmse <= 50.83 * 1.25


class TestSelectOrder:
    def test_ma1_prefers_moving_average(self):
        hits = 0
        for seed in range(20):
            order = select_order(sim_ma1(seed))
            hits += order.q >= 1 and order.p <= 1
        assert hits > 10

    def test_white_noise_selects_empty_model(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            order = select_order(rng.normal(size=500))
            hits += (order.p, order.q) == (0, 0)
        assert hits > 10

    def test_india_soft_order_check(self, country_series):
        order = select_order(country_series["india"], LOG_TRANSFORM)
        assert abs(order.p - 1) <= 1
        assert abs(order.q - 1) <= 1
        assert order.d in (1, 2)

    def test_short_series_rejected(self):
        with pytest.raises(ValueError, match="at least 20"):
            select_order(np.ones(10))


class TestForecast:
    def test_constant_mean_model(self):
        rng = np.random.default_rng(2)
        x = rng.normal(loc=3.0, size=100)
        fit = fit_arima(x, ArimaOrder(0, 0, 0))
        fc = forecast_transformed(fit, 5)
        np.testing.assert_allclose(fc, fit.intercept)

    def test_random_walk_forecast_is_flat(self):
        s = make_series([1, 5, 2, 8, 3, 9, 4, 10, 6, 11, 7, 12, 8, 13, 9, 14, 10, 15, 11, 16])
        fit = fit_arima(s, ArimaOrder(0, 1, 0), LOG_TRANSFORM)
        fc = forecast_transformed(fit, 6)
        np.testing.assert_allclose(fc, fit.transformed[-1], atol=1e-12)

    def test_ar1_closed_form_recursion(self):
        fit = fit_arima(sim_ar1(9), ArimaOrder(1, 0, 0))
        fc = forecast_transformed(fit, 8)
        # independent closed-form recursion from the fitted parameters
        expected = []
        last = fit.transformed[-1]
        for _ in range(8):
            last = fit.intercept + fit.phi[0] * last
            expected.append(last)
        np.testing.assert_allclose(fc, expected, rtol=1e-12)

    def test_level_forecasts_non_negative_and_deterministic(self, country_series):
        s = country_series["south_korea"]
        fit = fit_arima(s, ArimaOrder(2, 1, 0), LOG_TRANSFORM)
        fc1 = forecast_arima(fit, 10)
        fc2 = forecast_arima(fit, 10)
        assert np.all(fc1 >= 0)
        np.testing.assert_array_equal(fc1, fc2)

    def test_invalid_horizon(self):
        fit = fit_arima(sim_ar1(0), ArimaOrder(1, 0, 0))
        with pytest.raises(ValueError, match="horizon"):
            forecast_arima(fit, 0)
