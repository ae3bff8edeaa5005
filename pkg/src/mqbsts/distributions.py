"""Seeded random samplers and matrix utilities used by the Gibbs sampler.

Only the five sampling families the model needs are provided: multivariate
normal, inverse Wishart, generalized inverse Gaussian, unit exponential, and
the multivariate asymmetric Laplace built from the exponential-mixture
representation.  Every sampler is a pure function of its parameters and the
supplied generator.
"""

import numpy as np
from scipy import stats

from .errors import NumericalError

# Relative pivot tolerance: a Cholesky pivot must exceed this fraction of the
# Frobenius norm of the input, otherwise the matrix is treated as non-PD.
PD_PIVOT_RTOL = 1e-12


def make_rng(seed):
    """Deterministic generator (PCG64) for a 64-bit seed."""
    return np.random.default_rng(seed)


def check_symmetric(sigma, rtol=1e-12):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {sigma.shape}")
    scale = max(np.abs(sigma).max(), 1.0)
    if np.abs(sigma - sigma.T).max() > rtol * scale * sigma.shape[0]:
        raise ValueError("matrix is not symmetric within tolerance")
    return 0.5 * (sigma + sigma.T)


def cholesky_upper(sigma):
    """Upper-triangular U with U.T @ U = sigma.

    Raises NumericalError naming the failing pivot index when the input is
    not positive definite within `PD_PIVOT_RTOL` of its Frobenius norm.
    """
    sigma = check_symmetric(sigma)
    dim = sigma.shape[0]
    threshold = PD_PIVOT_RTOL * np.linalg.norm(sigma)
    upper = np.zeros((dim, dim))
    for j in range(dim):
        pivot = sigma[j, j] - upper[:j, j] @ upper[:j, j]
        if pivot <= threshold:
            raise NumericalError(
                f"Cholesky pivot {j} is {pivot:.3e} (threshold {threshold:.3e}); "
                "matrix is not positive definite"
            )
        upper[j, j] = np.sqrt(pivot)
        if j + 1 < dim:
            upper[j, j + 1:] = (sigma[j, j + 1:] - upper[:j, j] @ upper[:j, j + 1:]) / upper[j, j]
    return upper


def sample_mvn(mean, cov, rng, size=None):
    """Draw from N(mean, cov); returns (m,) or (size, m)."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (mean.size, mean.size):
        raise ValueError(f"mean has dim {mean.size} but cov has shape {cov.shape}")
    upper = cholesky_upper(cov)
    if size is None:
        return mean + rng.standard_normal(mean.size) @ upper
    return mean + rng.standard_normal((size, mean.size)) @ upper


def sample_inverse_wishart(df, scale, rng, size=None):
    """Draw from IW(df, scale) via Bartlett decomposition of the inverted-scale Wishart.

    Requires df > dim - 1.  E[draw] = scale / (df - dim - 1) for df > dim + 1.
    """
    scale = check_symmetric(scale)
    dim = scale.shape[0]
    if df <= dim - 1:
        raise ValueError(f"inverse Wishart needs df > dim - 1, got df={df}, dim={dim}")
    # Wishart(df, scale^-1) via Bartlett, then invert.
    upper_inv = cholesky_upper(np.linalg.inv(scale))
    lower = upper_inv.T
    nsamp = 1 if size is None else size
    bart = np.zeros((nsamp, dim, dim))
    tril_idx = np.tril_indices(dim, k=-1)
    if tril_idx[0].size:
        bart[:, tril_idx[0], tril_idx[1]] = rng.standard_normal((nsamp, tril_idx[0].size))
    diag_df = df - np.arange(dim)
    bart[:, np.arange(dim), np.arange(dim)] = np.sqrt(rng.chisquare(diag_df, size=(nsamp, dim)))
    factor = lower @ bart  # (nsamp, dim, dim)
    wishart = factor @ np.swapaxes(factor, -1, -2)
    draws = np.linalg.inv(wishart)
    draws = 0.5 * (draws + np.swapaxes(draws, -1, -2))
    return draws[0] if size is None else draws


def sample_gig(a, b, p, rng, size=None):
    """Draw from GIG(a, b, p), density proportional to x^(p-1) exp(-(a*x + b/x)/2)."""
    if a <= 0 or b <= 0:
        raise ValueError(f"GIG requires a > 0 and b > 0, got a={a}, b={b}")
    draws = stats.geninvgauss.rvs(
        p, np.sqrt(a * b), scale=np.sqrt(b / a),
        size=1 if size is None else size, random_state=rng,
    )
    return float(draws[0]) if size is None else draws


def sample_exponential_unit(rng, size=None):
    """Unit-mean exponential draws (the MAL mixing variable)."""
    if size is None:
        return float(rng.exponential(1.0))
    return rng.exponential(1.0, size=size)


def sample_mal(phi, sigma, rng, size=None):
    """Draw from the m-variate asymmetric Laplace: phi*w + sqrt(w)*e with
    w ~ Exp(1) and e ~ N(0, sigma)."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (phi.size, phi.size):
        raise ValueError(f"phi has dim {phi.size} but sigma has shape {sigma.shape}")
    if size is None:
        w = sample_exponential_unit(rng)
        return phi * w + np.sqrt(w) * sample_mvn(np.zeros(phi.size), sigma, rng)
    w = sample_exponential_unit(rng, size=size)
    gauss = sample_mvn(np.zeros(phi.size), sigma, rng, size=size)
    return phi * w[:, None] + np.sqrt(w)[:, None] * gauss
