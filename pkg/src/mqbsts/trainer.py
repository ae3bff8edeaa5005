"""Gibbs-sampler training loop, burn-in handling, and posterior summaries."""

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .distributions import make_rng, sample_inverse_wishart
from .errors import NumericalError
from .model import (QuantileSpec, design_tensor, regression_fit,
                    sigma_eps_from)
from .trend import TrendHyper, default_trend_hyper, draw_trend_covariances, draw_trend_states

# Acceptance-rate window for the burn-in step-size adaptation of the Phi walk.
_ADAPT_EVERY = 25
_ADAPT_LOW = 0.30
_ADAPT_HIGH = 0.45


@dataclass(frozen=True)
class McmcConfig:
    """All prior hyperparameters and MCMC controls, with the documented defaults."""

    iterations: int = 400
    burn_in: int = 200
    seed: int = 0
    threshold_inclusion: float = 0.8
    phi_init: np.ndarray | float = 0.1
    phi_step: float = 0.05
    adapt_phi: bool = True
    pi: np.ndarray | float = 0.5
    b_prior: np.ndarray | float = 0.0
    kappa: float = 0.01
    r_squared: float = 0.8
    v0: float = 5.0
    nu_alpha: float = 0.01
    v_alpha: float = 0.01
    consistent_w_exponent: bool = True
    trend_scale_by_w: bool = True
    trend: TrendHyper | None = None  # None: trend enabled with D=0, lambda=1

    def __post_init__(self):
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if not 0.0 <= self.threshold_inclusion <= 1.0:
            raise ValueError("threshold_inclusion must lie in [0, 1]")


@dataclass
class McmcDraw:
    """Full Gibbs state for one retained iteration."""

    iteration: int
    gamma: np.ndarray
    beta: np.ndarray
    sigma_tau: np.ndarray
    phi_diag: np.ndarray
    w: float
    mu: np.ndarray | None = None
    delta: np.ndarray | None = None
    sigma_mu: np.ndarray | None = None
    sigma_delta: np.ndarray | None = None


@dataclass
class PosteriorSample:
    """Ordered post-burn-in draws plus the context forecasting needs."""

    draws: list
    config: McmcConfig
    tau: QuantileSpec
    trend: TrendHyper
    series_names: tuple
    predictor_names: tuple
    coefficient_labels: list
    dataset_fingerprint: str
    dataset_shape: tuple  # (n, m, k_1..k_m)
    phi_acceptance: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.draws)


def _resolve_trend(config, m):
    if config.trend is None:
        return default_trend_hyper(m, enabled=True)
    hyper = config.trend
    if hyper.enabled and hyper.d.size != m:
        raise ValueError(f"trend hyperparameters have dim {hyper.d.size}, expected {m}")
    return hyper


def compute_v0_scale(y, v0, r_squared):
    """Slab scale V0 = (v0 - m - 1) * (1 - R^2) * sample covariance of the targets."""
    m = y.shape[1]
    if v0 <= m + 1:
        raise ValueError(f"v0 must exceed m + 1 = {m + 1}, got {v0}")
    sigma_y = np.atleast_2d(np.cov(y.T))
    return (v0 - m - 1) * (1.0 - r_squared) * sigma_y


def train(dataset, tau, config=McmcConfig()):
    """Run the full Gibbs loop and return the post-burn-in draws.

    Per iteration: trend-state draw, trend covariance draws, SSVS sweep,
    coefficient draw, error-base covariance draw, scale MH sweep, mixing
    scalar draw -- in that fixed order, on the freshly detrended targets.
    """
    if tau.m != dataset.m:
        raise ValueError(f"tau has {tau.m} entries but the dataset has {dataset.m} series")
    n, m, K = dataset.n, dataset.m, dataset.total_predictors
    rng = make_rng(config.seed)
    hyper = _resolve_trend(config, m)

    x_tensor = design_tensor(dataset)
    x_flat = x_tensor.reshape(m * n, K)
    a_full = config.kappa * (x_flat.T @ x_flat) / n
    v0_scale = compute_v0_scale(dataset.y, config.v0, config.r_squared)
    pi = np.broadcast_to(np.asarray(config.pi, dtype=float), (K,)).copy()
    b_prior = np.broadcast_to(np.asarray(config.b_prior, dtype=float), (K,)).copy()
    psi_tilde = tau.psi_tilde

    # Warm start: full support with per-series least-squares coefficients, so the
    # first trend draw sees a target that is already close to detrended.  A cold
    # (all-zero) start lets the trend absorb the mean of the regression signal,
    # after which high-mean predictors get recruited as pseudo-intercepts and the
    # chain sticks in that mode for hundreds of iterations.
    gamma = np.ones(K, dtype=np.int8)
    beta = np.zeros(K)
    for i, (sl, x) in enumerate(zip(dataset.slices(), dataset.predictors)):
        beta[sl] = np.linalg.lstsq(x, dataset.y[:, i], rcond=None)[0]
    sigma_tau = sample_inverse_wishart(config.v0, v0_scale, rng)
    phi_diag = np.broadcast_to(np.asarray(config.phi_init, dtype=float), (m,)).copy()
    if np.any(phi_diag <= 0):
        raise ValueError("phi_init must be strictly positive")
    w = 1.0
    mu = np.zeros((n, m))
    delta = np.zeros((n, m))
    sigma_mu = config.v_alpha * np.eye(m)
    sigma_delta = config.v_alpha * np.eye(m)

    steps = np.full(m, config.phi_step)
    accept_count = np.zeros(m)
    window_count = np.zeros(m)
    total_accept = np.zeros(m)

    draws = []
    step_name = "init"
    for it in range(1, config.iterations + 1):
        try:
            phi_eps = phi_diag * psi_tilde
            if hyper.enabled:
                step_name = "trend-states"
                fit = regression_fit(dataset, beta)
                sigma_eps = sigma_eps_from(phi_diag, sigma_tau)
                mu, delta = draw_trend_states(
                    dataset.y, fit, phi_eps, sigma_eps, w, hyper, sigma_mu, sigma_delta, rng,
                    scale_by_w=config.trend_scale_by_w,
                )
                step_name = "trend-covariances"
                sigma_mu, sigma_delta = draw_trend_covariances(
                    mu, delta, hyper, w, config.nu_alpha, config.v_alpha, rng,
                    scale_by_w=config.trend_scale_by_w,
                )
                z_mat = dataset.y - mu
            else:
                z_mat = dataset.y

            step_name = "decorrelate"
            sys = kernels.decorrelate(z_mat, x_tensor, phi_diag, sigma_tau, phi_eps)
            step_name = "gamma-ssvs"
            gamma = kernels.draw_gamma_ssvs(sys, gamma, pi, w, b_prior, a_full, rng)
            step_name = "beta"
            beta = kernels.draw_beta(sys, gamma, w, b_prior, a_full, rng)
            step_name = "sigma-tau"
            resid = z_mat - regression_fit(dataset, beta)
            sigma_tau = kernels.draw_sigma_tau(
                resid, phi_diag, phi_eps, w, config.v0, v0_scale, rng
            )
            step_name = "phi-mh"
            phi_diag, accepts = kernels.draw_phi_mh(
                phi_diag, resid, psi_tilde, sigma_tau, w, steps, rng
            )
            phi_eps = phi_diag * psi_tilde
            step_name = "w"
            sys = kernels.decorrelate(z_mat, x_tensor, phi_diag, sigma_tau, phi_eps)
            w = kernels.draw_w(
                sys, beta, m * n, rng, consistent_exponent=config.consistent_w_exponent
            )
        except NumericalError as exc:
            raise NumericalError(f"iteration {it}, kernel '{step_name}': {exc}") from exc

        if not (np.all(np.isfinite(beta)) and np.isfinite(w) and np.all(np.isfinite(sigma_tau))):
            raise NumericalError(f"iteration {it}: non-finite values in the chain state")

        accept_count += accepts
        window_count += 1
        total_accept += accepts
        if config.adapt_phi and it <= config.burn_in and it % _ADAPT_EVERY == 0:
            rates = accept_count / window_count
            steps = np.where(rates > _ADAPT_HIGH, steps * 1.15, steps)
            steps = np.where(rates < _ADAPT_LOW, steps / 1.15, steps)
            accept_count[:] = 0.0
            window_count[:] = 0.0

        if it > config.burn_in:
            draws.append(McmcDraw(
                iteration=it,
                gamma=gamma.copy(),
                beta=beta.copy(),
                sigma_tau=sigma_tau.copy(),
                phi_diag=phi_diag.copy(),
                w=float(w),
                mu=mu.copy() if hyper.enabled else None,
                delta=delta.copy() if hyper.enabled else None,
                sigma_mu=sigma_mu.copy() if hyper.enabled else None,
                sigma_delta=sigma_delta.copy() if hyper.enabled else None,
            ))

    return PosteriorSample(
        draws=draws,
        config=config,
        tau=tau,
        trend=hyper,
        series_names=dataset.series_names,
        predictor_names=dataset.predictor_names,
        coefficient_labels=dataset.coefficient_labels(),
        dataset_fingerprint=dataset.fingerprint(),
        dataset_shape=(n, m) + dataset.k,
        phi_acceptance=total_accept / config.iterations,
    )


def inclusion_probabilities(sample):
    """Fraction of retained draws in which each coefficient was active."""
    if len(sample) == 0:
        raise ValueError("posterior sample is empty")
    gammas = np.stack([d.gamma for d in sample.draws])
    return gammas.mean(axis=0)


def selected_support(sample, threshold=None):
    """Boolean support at the inclusion threshold (comparison is >= threshold)."""
    if threshold is None:
        threshold = sample.config.threshold_inclusion
    return inclusion_probabilities(sample) >= threshold


def posterior_coefficient_summary(sample, truth=None):
    """Posterior mean and SD per coefficient, plus the normalized error
    |(estimated - true) / true| where a nonzero truth is supplied."""
    if len(sample) == 0:
        raise ValueError("posterior sample is empty")
    betas = np.stack([d.beta for d in sample.draws])
    mean = betas.mean(axis=0)
    sd = betas.std(axis=0)
    norm_error = np.full(mean.size, np.nan)
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        nonzero = truth != 0.0
        norm_error[nonzero] = np.abs((mean[nonzero] - truth[nonzero]) / truth[nonzero])
    return {
        "labels": list(sample.coefficient_labels),
        "mean": mean,
        "sd": sd,
        "normalized_error": norm_error,
    }


def with_seed(config, seed):
    """Copy of a config with a different seed (convenience for multi-chain runs)."""
    return replace(config, seed=seed)
