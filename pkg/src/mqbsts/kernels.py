"""Gibbs kernels for the quantile-regression block: decorrelation transform,
SSVS indicator sweep, coefficient draw, error-scale draws, and the mixing
scalar draw.

All kernels are stateless functions of an explicitly passed chain state; the
inner linear algebra works on the active set only and goes through Cholesky
factorizations rather than explicit inverses.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .distributions import cholesky_upper, sample_gig, sample_inverse_wishart
from .errors import NumericalError


@dataclass(frozen=True)
class DecorrelatedSystem:
    """The stacked system after the per-series whitening recombination.

    Applying C = ((U Phi)^-1)^T with Sigma_tau = U^T U turns the error
    covariance Phi Sigma_tau Phi into the identity; the Kronecker factor
    C (x) I_n is never materialized.
    """

    z_hat: np.ndarray        # (m*n,)
    x_hat: np.ndarray        # (m*n, K)
    phi_eps_hat: np.ndarray  # (m*n,)
    combine: np.ndarray      # the m x m recombination matrix C


def decorrelate(z_mat, x_tensor, phi_diag, sigma_tau, phi_eps):
    """Whiten the stacked system given the current (Phi, Sigma_tau).

    z_mat is the detrended n x m target; x_tensor the (m, n, K) design.
    """
    m, n, K = x_tensor.shape
    upper = cholesky_upper(sigma_tau)
    scaled = upper * np.asarray(phi_diag, dtype=float)[None, :]  # U @ Phi, upper triangular
    combine = sla.solve_triangular(scaled, np.eye(m)).T          # ((U Phi)^-1)^T, lower
    z_hat = (combine @ z_mat.T).reshape(-1)
    x_hat = np.einsum("ij,jnk->ink", combine, x_tensor).reshape(m * n, K)
    phi_eps_hat = np.repeat(combine @ phi_eps, n)
    return DecorrelatedSystem(z_hat, x_hat, phi_eps_hat, combine)


def _active_log_mass(keep, gram, h_data, h_phi, a_full, b_prior, w):
    """Unnormalized log-mass of an inclusion configuration with active set `keep`.

    Terms: -(b'Ab - Xi'M^-1 Xi)/2 + log|A|/2 - log|M|/2 with
    M = X_hat'X_hat/W + A, all restricted to the active set; both determinant
    factors are read as determinants of the active-set matrices.
    """
    if keep.size == 0:
        return 0.0
    a_sub = a_full[np.ix_(keep, keep)]
    m_sub = gram[np.ix_(keep, keep)] / w + a_sub
    try:
        a_chol = sla.cholesky(a_sub, lower=True)
        m_chol = sla.cho_factor(m_sub, lower=True)
    except sla.LinAlgError:
        return -np.inf
    b_sub = b_prior[keep]
    xi = h_data[keep] / w - h_phi[keep] + a_sub @ b_sub
    quad = xi @ sla.cho_solve(m_chol, xi) - b_sub @ (a_sub @ b_sub)
    logdet_a = 2.0 * np.sum(np.log(np.diag(a_chol)))
    logdet_m = 2.0 * np.sum(np.log(np.diag(m_chol[0])))
    return 0.5 * (quad + logdet_a - logdet_m)


def draw_gamma_ssvs(sys, gamma, pi, w, b_prior, a_full, rng):
    """One SSVS sweep: coordinates visited in a fresh uniformly random order,
    each drawn Bernoulli from the normalized pair of conditional masses.

    Coordinates with prior probability exactly 0 or 1 are forced without
    computation.
    """
    gamma = np.asarray(gamma, dtype=np.int8).copy()
    K = gamma.size
    pi = np.broadcast_to(np.asarray(pi, dtype=float), (K,))
    b_prior = np.broadcast_to(np.asarray(b_prior, dtype=float), (K,))
    gram = sys.x_hat.T @ sys.x_hat
    h_data = sys.x_hat.T @ sys.z_hat
    h_phi = sys.x_hat.T @ sys.phi_eps_hat

    for k in rng.permutation(K):
        if pi[k] == 0.0:
            gamma[k] = 0
            continue
        if pi[k] == 1.0:
            gamma[k] = 1
            continue
        gamma[k] = 1
        keep_on = np.flatnonzero(gamma)
        gamma[k] = 0
        keep_off = np.flatnonzero(gamma)
        log_on = _active_log_mass(keep_on, gram, h_data, h_phi, a_full, b_prior, w)
        log_off = _active_log_mass(keep_off, gram, h_data, h_phi, a_full, b_prior, w)
        log_on += np.log(pi[k])
        log_off += np.log1p(-pi[k])
        if np.isneginf(log_on) and np.isneginf(log_off):
            raise NumericalError(f"both inclusion masses vanished at coordinate {k}")
        # p(gamma_k = 1); equal masses reduce to a fair Bernoulli.
        prob_on = 1.0 / (1.0 + np.exp(min(log_off - log_on, 700.0)))
        gamma[k] = 1 if rng.random() < prob_on else 0
    return gamma


def draw_beta(sys, gamma, w, b_prior, a_full, rng):
    """Conditional Gaussian coefficient draw on the active set; zeros elsewhere."""
    gamma = np.asarray(gamma)
    K = gamma.size
    beta = np.zeros(K)
    keep = np.flatnonzero(gamma)
    if keep.size == 0:
        return beta
    b_prior = np.broadcast_to(np.asarray(b_prior, dtype=float), (K,))
    x_sub = sys.x_hat[:, keep]
    a_sub = a_full[np.ix_(keep, keep)]
    precision = x_sub.T @ x_sub / w + a_sub
    try:
        upper = cholesky_upper(precision)
    except NumericalError as exc:
        raise NumericalError(f"singular coefficient precision matrix: {exc}") from exc
    rhs = x_sub.T @ sys.z_hat / w - x_sub.T @ sys.phi_eps_hat + a_sub @ b_prior[keep]
    mean = sla.cho_solve((upper, False), rhs)
    # precision = U'U, so mean + U^-1 z has the required covariance.
    beta[keep] = mean + sla.solve_triangular(upper, rng.standard_normal(keep.size))
    return beta


def draw_sigma_tau(resid, phi_diag, phi_eps, w, v0, v0_scale, rng):
    """Inverse-Wishart draw of the error-base covariance.

    `resid` is the n x m matrix Z - fit; the scale increment is the Gram matrix
    of (resid - phi_eps*W) / phi, divided by W.
    """
    phi_diag = np.asarray(phi_diag, dtype=float)
    whitened = (resid - w * phi_eps[None, :]) / phi_diag[None, :]
    scale = v0_scale + (whitened.T @ whitened) / w
    n = resid.shape[0]
    return sample_inverse_wishart(v0 + n, 0.5 * (scale + scale.T), rng)


def phi_log_density(phi_diag, resid, psi_tilde, sigma_tau_upper, w):
    """Log conditional density of the scale diagonal, up to a constant.

    -n * sum(log phi) - ||(resid/phi - W*psi_tilde) U^-1||_F^2 / (2W).
    """
    phi_diag = np.asarray(phi_diag, dtype=float)
    n = resid.shape[0]
    core = resid / phi_diag[None, :] - w * psi_tilde[None, :]
    transformed = sla.solve_triangular(sigma_tau_upper.T, core.T, lower=True).T
    return -n * np.sum(np.log(phi_diag)) - 0.5 / w * np.sum(transformed * transformed)


def draw_phi_mh(phi_diag, resid, psi_tilde, sigma_tau, w, step_sizes, rng):
    """One Metropolis-Hastings sweep over the scale diagonal.

    Per-coordinate Gaussian random walk on log(phi_i); the log-scale proposal
    contributes a +log(phi'/phi) Jacobian term to the acceptance ratio.
    """
    phi_diag = np.asarray(phi_diag, dtype=float).copy()
    step_sizes = np.broadcast_to(np.asarray(step_sizes, dtype=float), phi_diag.shape)
    upper = cholesky_upper(sigma_tau)
    log_curr = phi_log_density(phi_diag, resid, psi_tilde, upper, w)
    accepts = np.zeros(phi_diag.size, dtype=bool)
    for i in range(phi_diag.size):
        proposal = phi_diag.copy()
        proposal[i] = phi_diag[i] * np.exp(step_sizes[i] * rng.standard_normal())
        log_prop = phi_log_density(proposal, resid, psi_tilde, upper, w)
        log_ratio = log_prop - log_curr + np.log(proposal[i]) - np.log(phi_diag[i])
        if np.log(rng.random()) < log_ratio:
            phi_diag = proposal
            log_curr = log_prop
            accepts[i] = True
    return phi_diag, accepts


def draw_w(sys, beta, mn, rng, consistent_exponent=True):
    """GIG draw of the mixing scalar: a = 2 + phi_hat'phi_hat, b = ||r||^2 with
    r = Z_hat - X_hat @ beta; p = 1 - m*n/2 by default (self-consistent
    expansion of the likelihood determinant), or 1 - n/2 as printed when
    `consistent_exponent` is False, with n = mn / m inferred by the caller.
    """
    resid = sys.z_hat - sys.x_hat @ beta
    b = float(resid @ resid)
    a = 2.0 + float(sys.phi_eps_hat @ sys.phi_eps_hat)
    if b <= 1e-300:
        raise NumericalError("degenerate perfect-fit state: GIG parameter b is zero")
    p = 1.0 - 0.5 * mn if consistent_exponent else 1.0 - 0.5 * (mn / _infer_m(sys))
    return sample_gig(a, b, p, rng)


def _infer_m(sys):
    return sys.combine.shape[0]
