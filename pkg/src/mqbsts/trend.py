"""Local-linear-trend latent state draws and trend covariance draws.

The state is (mu_t, delta_t) in R^{2m} with transition
    mu_{t+1}    = mu_t + delta_t + u_t,            u_t ~ N(0, Sigma_mu)
    delta_{t+1} = D + lambda*(delta_t - D) + v_t,  v_t ~ N(0, Sigma_delta)
and, conditional on the mixing scalar W, Gaussian observations
    obs_t = y_t - xi_t - phi_eps*W = mu_t + sqrt(W)*e_t,  e_t ~ N(0, Sigma_eps).

A joint path draw comes from the mean-correction simulation smoother: simulate
an unconditional path, Kalman-smooth both the real and simulated observations,
and correct the simulated path by the difference of smoothed means.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .distributions import sample_inverse_wishart
from .errors import NumericalError

DIFFUSE_VARIANCE = 1e6


@dataclass(frozen=True)
class TrendHyper:
    """Trend on/off switch, long-run slopes D, and learning rates lambda in [0, 1]."""

    enabled: bool
    d: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if d.shape != lam.shape:
            raise ValueError("D and lambda must have the same length")
        if np.any(lam < 0.0) or np.any(lam > 1.0):
            raise ValueError("learning rates must lie in [0, 1]")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "lam", lam)


def default_trend_hyper(m, enabled=True):
    """D = 0, lambda = 1: a pure local linear trend."""
    return TrendHyper(enabled, np.zeros(m), np.ones(m))


@dataclass
class TrendState:
    """Latent trend paths and their innovation covariances."""

    mu: np.ndarray
    delta: np.ndarray
    sigma_mu: np.ndarray
    sigma_delta: np.ndarray


@njit(cache=True)
def _chol_lower(a):
    dim = a.shape[0]
    lower = np.zeros((dim, dim))
    for j in range(dim):
        acc = a[j, j]
        for k in range(j):
            acc -= lower[j, k] * lower[j, k]
        if acc <= 0.0:
            return False, lower
        lower[j, j] = np.sqrt(acc)
        for i in range(j + 1, dim):
            acc = a[i, j]
            for k in range(j):
                acc -= lower[i, k] * lower[j, k]
            lower[i, j] = acc / lower[j, j]
    return True, lower


@njit(cache=True)
def _dk_draw_core(obs, trans, const, state_cov, obs_cov, a1, p1,
                  z_init, z_state, z_obs):
    """Mean-correction simulation smoother; observation matrix selects mu.

    Returns (status, draw): status 0 on success, t+1 when the filter loses
    positive-definiteness at time t.
    """
    n, m = obs.shape
    s = trans.shape[0]

    ok_q, lower_q = _chol_lower(state_cov)
    ok_h, lower_h = _chol_lower(obs_cov)
    ok_p, lower_p = _chol_lower(p1)
    draw = np.zeros((n, s))
    if not (ok_q and ok_h and ok_p):
        return 1, draw

    # Unconditional simulation of states and observations.
    alpha_plus = np.empty((n, s))
    y_plus = np.empty((n, m))
    a = a1 + lower_p @ z_init
    for t in range(n):
        alpha_plus[t] = a
        y_plus[t] = a[:m] + lower_h @ z_obs[t]
        a = const + trans @ a + lower_q @ z_state[t]

    # Forward filter, shared covariance recursion for both observation sets.
    a_pred = np.empty((2, n, s))
    p_pred = np.empty((n, s, s))
    innov = np.empty((2, n, m))
    f_inv = np.empty((n, m, m))
    l_mats = np.empty((n, s, s))
    a_run = np.empty((2, s))
    a_run[0] = a1
    a_run[1] = a1
    p_run = p1.copy()
    for t in range(n):
        a_pred[0, t] = a_run[0]
        a_pred[1, t] = a_run[1]
        p_pred[t] = p_run
        f_mat = p_run[:m, :m] + obs_cov
        ok_f, _ = _chol_lower(f_mat)
        if not ok_f:
            return t + 1, draw
        f_inv[t] = np.linalg.inv(f_mat)
        gain = p_run[:, :m] @ f_inv[t]          # P Z' F^-1, (s, m)
        innov[0, t] = obs[t] - a_run[0, :m]
        innov[1, t] = y_plus[t] - a_run[1, :m]
        t_gain = trans @ gain
        a_run[0] = const + trans @ a_run[0] + t_gain @ innov[0, t]
        a_run[1] = const + trans @ a_run[1] + t_gain @ innov[1, t]
        l_mat = trans.copy()
        l_mat[:, :m] -= t_gain
        l_mats[t] = l_mat
        p_run = trans @ p_run @ l_mat.T + state_cov
        p_run = 0.5 * (p_run + p_run.T)

    # Backward smoothing pass for both mean paths.
    r_vec = np.zeros((2, s))
    correction = np.empty((n, s))
    for t in range(n - 1, -1, -1):
        for which in range(2):
            new_r = l_mats[t].T @ r_vec[which]
            new_r[:m] += f_inv[t] @ innov[which, t]
            r_vec[which] = new_r
        smooth_obs = a_pred[0, t] + p_pred[t] @ r_vec[0]
        smooth_plus = a_pred[1, t] + p_pred[t] @ r_vec[1]
        correction[t] = smooth_obs - smooth_plus

    for t in range(n):
        draw[t] = alpha_plus[t] + correction[t]
    return 0, draw


def draw_trend_states(y, xi, phi_eps, sigma_eps, w, hyper, sigma_mu, sigma_delta, rng,
                      scale_by_w=True):
    """Joint draw of (mu, delta) paths from their conditional smoothing distribution.

    When ``scale_by_w`` is set the trend innovations share the mixing scale W with
    the observation noise, matching the W-scaled inverse-Wishart update for the
    trend covariances.
    """
    y = np.asarray(y, dtype=float)
    n, m = y.shape
    if w <= 0.0:
        raise ValueError(f"mixing scalar W must be positive, got {w}")
    obs = y - xi - phi_eps[None, :] * w
    obs_cov = w * np.asarray(sigma_eps, dtype=float)
    state_scale = w if scale_by_w else 1.0

    s = 2 * m
    trans = np.zeros((s, s))
    trans[:m, :m] = np.eye(m)
    trans[:m, m:] = np.eye(m)
    trans[m:, m:] = np.diag(hyper.lam)
    const = np.zeros(s)
    const[m:] = (1.0 - hyper.lam) * hyper.d
    state_cov = np.zeros((s, s))
    state_cov[:m, :m] = sigma_mu
    state_cov[m:, m:] = sigma_delta
    state_cov *= state_scale

    a1 = np.concatenate([obs[0], hyper.d])
    p1 = DIFFUSE_VARIANCE * np.eye(s)

    z_init = rng.standard_normal(s)
    z_state = rng.standard_normal((n, s))
    z_obs = rng.standard_normal((n, m))
    status, draw = _dk_draw_core(
        obs, trans, const, state_cov, obs_cov, a1, p1, z_init, z_state, z_obs
    )
    if status != 0:
        raise NumericalError(
            f"simulation smoother lost positive-definiteness at time index {status - 1}"
        )
    if not np.all(np.isfinite(draw)):
        raise NumericalError("simulation smoother produced non-finite states")
    return draw[:, :m].copy(), draw[:, m:].copy()


def draw_trend_covariances(mu, delta, hyper, w, nu_alpha, v_alpha, rng, scale_by_w=True):
    """Inverse-Wishart draws of (Sigma_mu, Sigma_delta) from the path residuals.

    Residual rows: mu_{t+1} - mu_t - delta_t for the level and
    delta_{t+1} - D - lambda*(delta_t - D) for the slope; n-1 usable increments
    set both the scale increment and the degrees-of-freedom increment.
    """
    mu = np.asarray(mu, dtype=float)
    delta = np.asarray(delta, dtype=float)
    n, m = mu.shape
    resid_mu = mu[1:] - mu[:-1] - delta[:-1]
    resid_delta = delta[1:] - hyper.d - hyper.lam * (delta[:-1] - hyper.d)
    v_alpha = np.asarray(v_alpha, dtype=float)
    if v_alpha.ndim == 0:
        v_alpha = float(v_alpha) * np.eye(m)
    factor = 1.0 / w if scale_by_w else 1.0
    df = nu_alpha + (n - 1)
    sigma_mu = sample_inverse_wishart(df, v_alpha + factor * (resid_mu.T @ resid_mu), rng)
    sigma_delta = sample_inverse_wishart(df, v_alpha + factor * (resid_delta.T @ resid_delta), rng)
    return sigma_mu, sigma_delta
