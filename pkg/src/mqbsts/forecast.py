"""One-step-ahead joint quantile forecasting by model averaging over retained
draws, and the rolling expanding-window evaluation harness."""

from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .distributions import make_rng, sample_mal, sample_mvn
from .errors import NumericalError
from .model import quantile_loss, sigma_eps_from
from .trainer import train


@dataclass
class ForecastResult:
    """Per-draw simulated targets and their average for one horizon step."""

    horizon: int
    per_draw: np.ndarray    # (n_draws, m)
    prediction: np.ndarray  # (m,) arithmetic mean over draws
    trend_part: np.ndarray
    regression_part: np.ndarray
    error_part: np.ndarray


@dataclass
class EvaluationResult:
    """Rolling one-step-ahead forecasts and cumulative pinball losses."""

    predictions: np.ndarray      # (steps, m)
    realized: np.ndarray         # (steps, m)
    step_loss: np.ndarray        # (steps,) summed over series
    cumulative_loss: np.ndarray  # (steps,)
    baseline_predictions: np.ndarray
    baseline_step_loss: np.ndarray
    baseline_cumulative_loss: np.ndarray


def forecast_one_step(sample, new_predictors, rng=None, horizon=1):
    """Average the simulated next-step targets over every retained draw.

    For each draw: advance the trend one step with fresh state noise, dot the
    stored coefficients with the new predictor values, add an asymmetric
    Laplace error rebuilt from that draw's scale and covariance state, and sum.
    """
    if rng is None:
        rng = make_rng(sample.config.seed)
    if len(sample) == 0:
        raise ValueError("posterior sample is empty")
    k_sizes = sample.dataset_shape[2:]
    new_predictors = [np.atleast_1d(np.asarray(p, dtype=float)) for p in new_predictors]
    if len(new_predictors) != len(k_sizes) or any(
        p.size != k for p, k in zip(new_predictors, k_sizes)
    ):
        raise ValueError(
            f"new predictors have sizes {[p.size for p in new_predictors]}, "
            f"expected {list(k_sizes)}"
        )
    m = sample.dataset_shape[1]
    psi_tilde = sample.tau.psi_tilde
    hyper = sample.trend
    offsets = np.cumsum([0] + list(k_sizes))

    n_draws = len(sample)
    trend_part = np.zeros((n_draws, m))
    regression_part = np.empty((n_draws, m))
    error_part = np.empty((n_draws, m))
    for r, draw in enumerate(sample.draws):
        if hyper.enabled:
            noise_mu = sample_mvn(np.zeros(m), draw.sigma_mu, rng)
            noise_delta = sample_mvn(np.zeros(m), draw.sigma_delta, rng)
            mu_next = draw.mu[-1] + draw.delta[-1] + noise_mu
            # delta advance kept for multi-draw chains even though only mu enters
            _ = hyper.d + hyper.lam * (draw.delta[-1] - hyper.d) + noise_delta
            trend_part[r] = mu_next
        for i in range(m):
            regression_part[r, i] = new_predictors[i] @ draw.beta[offsets[i]:offsets[i + 1]]
        phi_eps = draw.phi_diag * psi_tilde
        sigma_eps = sigma_eps_from(draw.phi_diag, draw.sigma_tau)
        error_part[r] = sample_mal(phi_eps, sigma_eps, rng)

    per_draw = trend_part + regression_part + error_part
    return ForecastResult(
        horizon=horizon,
        per_draw=per_draw,
        prediction=per_draw.mean(axis=0),
        trend_part=trend_part.mean(axis=0),
        regression_part=regression_part.mean(axis=0),
        error_part=error_part.mean(axis=0),
    )


def baseline_empirical_quantile(y_train, tau):
    """Per-series empirical quantile of the training window (linear interpolation)."""
    y_train = np.asarray(y_train, dtype=float)
    if y_train.size == 0:
        raise ValueError("empty training window")
    return np.array([
        np.quantile(y_train[:, i], tau.tau[i], method="linear")
        for i in range(y_train.shape[1])
    ])


def rolling_evaluate(dataset, tau, config, steps, refit=True):
    """Expanding-window one-step-ahead evaluation over the last `steps` rows.

    For each step h, train on rows 1..(n0 + h - 1), forecast row n0 + h, and
    accumulate the summed per-series pinball loss; the empirical-quantile
    baseline forecasts the same rows from the same training windows.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    empty = np.zeros((0, dataset.m))
    if steps == 0:
        zeros = np.zeros(0)
        return EvaluationResult(empty, empty, zeros, zeros, empty, zeros, zeros)
    n0 = dataset.n - steps
    if n0 < 10:
        raise ValueError(
            f"insufficient data: {dataset.n} rows leave a training window of {n0}"
        )

    predictions = np.empty((steps, dataset.m))
    realized = np.empty((steps, dataset.m))
    baseline_predictions = np.empty((steps, dataset.m))
    step_loss = np.empty(steps)
    baseline_step_loss = np.empty(steps)
    sample = None
    forecast_rng = make_rng(np.random.SeedSequence([config.seed, 0x5eed]))
    for h in range(steps):
        n_train = n0 + h
        train_set = dataset.subset(n_train)
        if refit or sample is None:
            sample = train(train_set, tau, config)
        new_predictors = [x[n_train] for x in dataset.predictors]
        result = forecast_one_step(sample, new_predictors, rng=forecast_rng)
        predictions[h] = result.prediction
        realized[h] = dataset.y[n_train]
        baseline_predictions[h] = baseline_empirical_quantile(train_set.y, tau)
        step_loss[h] = sum(
            quantile_loss(realized[h, i] - predictions[h, i], tau.tau[i])
            for i in range(dataset.m)
        )
        baseline_step_loss[h] = sum(
            quantile_loss(realized[h, i] - baseline_predictions[h, i], tau.tau[i])
            for i in range(dataset.m)
        )
    return EvaluationResult(
        predictions=predictions,
        realized=realized,
        step_loss=step_loss,
        cumulative_loss=np.cumsum(step_loss),
        baseline_predictions=baseline_predictions,
        baseline_step_loss=baseline_step_loss,
        baseline_cumulative_loss=np.cumsum(baseline_step_loss),
    )
