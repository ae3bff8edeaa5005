import numpy as np
import pytest

from mqbsts.distributions import make_rng
from mqbsts.forecast import (baseline_empirical_quantile, forecast_one_step,
                             rolling_evaluate)
from mqbsts.model import QuantileSpec, make_dataset
from mqbsts.trainer import McmcConfig, train
from mqbsts.trend import TrendHyper

TAU = QuantileSpec(np.array([0.5, 0.5]))


def trained_sample(n=40, trend=False, seed=0):
    rng = make_rng(seed)
    x1 = rng.standard_normal((n, 2))
    x2 = rng.standard_normal((n, 2))
    y = np.column_stack([
        2.0 * x1[:, 0] + rng.standard_normal(n),
        -1.5 * x2[:, 1] + rng.standard_normal(n),
    ])
    ds = make_dataset(y, (x1, x2))
    cfg = McmcConfig(iterations=60, burn_in=20, seed=seed,
                     trend=None if trend else TrendHyper(False, np.zeros(2), np.ones(2)))
    return ds, train(ds, TAU, cfg)


def test_baseline_empirical_quantile_values():
    y = np.column_stack([np.arange(1.0, 101.0), np.arange(1.0, 101.0)])
    got = baseline_empirical_quantile(y, QuantileSpec(np.array([0.5, 0.9])))
    np.testing.assert_allclose(got, [50.5, 90.1])
    with pytest.raises(ValueError):
        baseline_empirical_quantile(np.zeros((0, 2)), TAU)


def test_forecast_prediction_is_mean_of_parts():
    _, sample = trained_sample(trend=True)
    new_predictors = [np.array([0.5, -0.2]), np.array([1.0, 0.3])]
    result = forecast_one_step(sample, new_predictors, rng=make_rng(11))
    assert result.per_draw.shape == (len(sample), 2)
    np.testing.assert_allclose(result.prediction, result.per_draw.mean(axis=0))
    np.testing.assert_allclose(
        result.prediction,
        result.trend_part + result.regression_part + result.error_part,
    )


def test_forecast_is_deterministic_given_rng():
    _, sample = trained_sample()
    new_predictors = [np.zeros(2), np.zeros(2)]
    a = forecast_one_step(sample, new_predictors, rng=make_rng(5))
    b = forecast_one_step(sample, new_predictors, rng=make_rng(5))
    np.testing.assert_array_equal(a.per_draw, b.per_draw)


def test_forecast_regression_part_uses_stored_coefficients():
    _, sample = trained_sample()
    new_predictors = [np.array([1.0, 0.0]), np.array([0.0, 0.0])]
    result = forecast_one_step(sample, new_predictors, rng=make_rng(3))
    want = np.mean([d.beta[0] for d in sample.draws])
    assert result.regression_part[0] == pytest.approx(want)
    assert result.trend_part[0] == 0.0  # trend disabled


def test_forecast_validates_predictor_sizes():
    _, sample = trained_sample()
    with pytest.raises(ValueError):
        forecast_one_step(sample, [np.zeros(3), np.zeros(2)])
    with pytest.raises(ValueError):
        forecast_one_step(sample, [np.zeros(2)])


def test_rolling_evaluate_zero_steps():
    ds, _ = trained_sample()
    cfg = McmcConfig(iterations=20, burn_in=5,
                     trend=TrendHyper(False, np.zeros(2), np.ones(2)))
    result = rolling_evaluate(ds, TAU, cfg, steps=0)
    assert result.predictions.shape == (0, 2)
    assert result.cumulative_loss.size == 0


def test_rolling_evaluate_window_guard():
    ds, _ = trained_sample(n=15)
    cfg = McmcConfig(iterations=20, burn_in=5,
                     trend=TrendHyper(False, np.zeros(2), np.ones(2)))
    with pytest.raises(ValueError):
        rolling_evaluate(ds, TAU, cfg, steps=10)
    with pytest.raises(ValueError):
        rolling_evaluate(ds, TAU, cfg, steps=-1)


def test_rolling_evaluate_accumulates_losses():
    ds, _ = trained_sample(n=40)
    cfg = McmcConfig(iterations=30, burn_in=10,
                     trend=TrendHyper(False, np.zeros(2), np.ones(2)))
    result = rolling_evaluate(ds, TAU, cfg, steps=3, refit=False)
    assert result.predictions.shape == (3, 2)
    np.testing.assert_array_equal(result.realized, ds.y[-3:])
    np.testing.assert_allclose(result.cumulative_loss, np.cumsum(result.step_loss))
    np.testing.assert_allclose(
        result.baseline_cumulative_loss, np.cumsum(result.baseline_step_loss)
    )
    assert np.all(result.step_loss >= 0.0)
