import numpy as np
import pytest
from scipy import integrate, stats

from mqbsts import kernels
from mqbsts.distributions import make_rng
from mqbsts.errors import NumericalError
from mqbsts.model import (QuantileSpec, assemble_block_X, design_tensor,
                          make_dataset, vectorize_by_series)


def toy_system(seed=0, n=5, m=2, k=(2, 1), tau_levels=(0.9, 0.3)):
    rng = make_rng(seed)
    ds = make_dataset(
        rng.standard_normal((n, m)),
        tuple(rng.standard_normal((n, ki)) for ki in k),
    )
    tau = QuantileSpec(np.array(tau_levels))
    phi = rng.uniform(0.5, 1.5, size=m)
    a = rng.standard_normal((m, m))
    sigma_tau = a @ a.T + m * np.eye(m)
    phi_eps = phi * tau.psi_tilde
    sys = kernels.decorrelate(ds.y, design_tensor(ds), phi, sigma_tau, phi_eps)
    return ds, sys, phi, sigma_tau, phi_eps


def test_decorrelation_whitens_error_covariance():
    rng = make_rng(0)
    for _ in range(20):
        m = rng.integers(1, 5)
        a = rng.standard_normal((m, m))
        sigma_tau = a @ a.T + m * np.eye(m)
        phi = rng.uniform(0.2, 2.0, size=m)
        ds = make_dataset(rng.standard_normal((4, m)),
                          tuple(rng.standard_normal((4, 2)) for _ in range(m)))
        sys = kernels.decorrelate(ds.y, design_tensor(ds), phi, sigma_tau,
                                  phi * np.ones(m))
        sigma_eps = (phi[:, None] * sigma_tau) * phi[None, :]
        np.testing.assert_allclose(
            sys.combine @ sigma_eps @ sys.combine.T, np.eye(m), atol=1e-10
        )


def test_decorrelation_equals_kronecker_product():
    ds, sys, phi, sigma_tau, phi_eps = toy_system()
    n = ds.n
    kron = np.kron(sys.combine, np.eye(n))
    np.testing.assert_allclose(sys.z_hat, kron @ vectorize_by_series(ds.y), atol=1e-12)
    np.testing.assert_allclose(sys.x_hat, kron @ assemble_block_X(ds), atol=1e-12)
    np.testing.assert_allclose(sys.phi_eps_hat, kron @ np.repeat(phi_eps, n), atol=1e-12)


def test_beta_draw_moments_match_closed_form():
    ds, sys, *_ = toy_system(seed=1)
    K = ds.total_predictors
    gamma = np.array([1, 0, 1])
    keep = np.flatnonzero(gamma)
    w = 0.8
    b_prior = np.full(K, 0.2)
    a_full = 0.5 * np.eye(K) + 0.05
    x_sub = sys.x_hat[:, keep]
    a_sub = a_full[np.ix_(keep, keep)]
    precision = x_sub.T @ x_sub / w + a_sub
    want_cov = np.linalg.inv(precision)
    want_mean = want_cov @ (
        x_sub.T @ sys.z_hat / w - x_sub.T @ sys.phi_eps_hat + a_sub @ b_prior[keep]
    )
    rng = make_rng(2)
    reps = 100_000
    draws = np.empty((reps, keep.size))
    for r in range(reps):
        draws[r] = kernels.draw_beta(sys, gamma, w, b_prior, a_full, rng)[keep]
    se = np.sqrt(np.diag(want_cov) / reps)
    np.testing.assert_array_less(np.abs(draws.mean(axis=0) - want_mean), 4.0 * se)
    np.testing.assert_allclose(np.cov(draws.T), want_cov, rtol=0.05)


def test_beta_draw_empty_support_is_zero():
    ds, sys, *_ = toy_system()
    beta = kernels.draw_beta(sys, np.zeros(3), 1.0, np.zeros(3), np.eye(3), make_rng(0))
    np.testing.assert_array_equal(beta, np.zeros(3))


def config_probabilities_oracle(sys, pi, w, b_prior, a_full):
    """Exact inclusion-configuration probabilities by integrating the
    coefficients out of the whitened Gaussian system directly."""
    K = a_full.shape[0]
    mn = sys.z_hat.size
    logs = []
    configs = [np.array([(c >> j) & 1 for j in range(K)]) for c in range(2 ** K)]
    for gamma in configs:
        keep = np.flatnonzero(gamma)
        mean = w * sys.phi_eps_hat
        cov = w * np.eye(mn)
        if keep.size:
            x_sub = sys.x_hat[:, keep]
            a_inv = np.linalg.inv(a_full[np.ix_(keep, keep)])
            mean = mean + x_sub @ b_prior[keep]
            cov = cov + x_sub @ a_inv @ x_sub.T
        log_mass = stats.multivariate_normal.logpdf(sys.z_hat, mean, cov)
        log_mass += np.sum(np.where(gamma, np.log(pi), np.log1p(-pi)))
        logs.append(log_mass)
    logs = np.array(logs)
    probs = np.exp(logs - logs.max())
    return configs, probs / probs.sum()


def test_ssvs_stationary_frequencies_match_enumeration():
    ds, sys, *_ = toy_system(seed=3)
    K = ds.total_predictors
    pi = np.full(K, 0.5)
    b_prior = np.zeros(K)
    a_full = 0.4 * np.eye(K) + 0.02
    w = 1.2
    configs, want = config_probabilities_oracle(sys, pi, w, b_prior, a_full)
    rng = make_rng(4)
    gamma = np.zeros(K, dtype=np.int8)
    counts = np.zeros(2 ** K)
    sweeps = 40_000
    for _ in range(sweeps):
        gamma = kernels.draw_gamma_ssvs(sys, gamma, pi, w, b_prior, a_full, rng)
        counts[int(np.sum(gamma * (1 << np.arange(K))))] += 1
    tv = 0.5 * np.abs(counts / sweeps - want).sum()
    assert tv < 0.02, f"total variation {tv:.4f}"


def test_ssvs_forces_degenerate_priors():
    ds, sys, *_ = toy_system()
    pi = np.array([0.0, 1.0, 0.5])
    gamma = kernels.draw_gamma_ssvs(sys, np.array([1, 0, 0], dtype=np.int8),
                                    pi, 1.0, np.zeros(3), np.eye(3), make_rng(0))
    assert gamma[0] == 0 and gamma[1] == 1


def gig_mean_by_quadrature(a, b, p):
    density = lambda x: x ** (p - 1.0) * np.exp(-0.5 * (a * x + b / x))
    norm, _ = integrate.quad(density, 0, np.inf)
    mean, _ = integrate.quad(lambda x: x * density(x), 0, np.inf)
    return mean / norm


@pytest.mark.parametrize("consistent", [True, False])
def test_w_draw_matches_quadrature(consistent):
    ds, sys, phi, sigma_tau, phi_eps = toy_system(seed=5)
    n, m = ds.n, ds.m
    beta = np.array([0.3, -0.2, 0.5])
    resid = sys.z_hat - sys.x_hat @ beta
    a = 2.0 + sys.phi_eps_hat @ sys.phi_eps_hat
    b = resid @ resid
    p = 1.0 - 0.5 * m * n if consistent else 1.0 - 0.5 * n
    want = gig_mean_by_quadrature(a, b, p)
    rng = make_rng(6)
    draws = np.array([
        kernels.draw_w(sys, beta, m * n, rng, consistent_exponent=consistent)
        for _ in range(100_000)
    ])
    assert abs(draws.mean() - want) < 0.02 * want


def test_w_draw_rejects_perfect_fit():
    ds, sys, *_ = toy_system()
    beta, *_ = np.linalg.lstsq(sys.x_hat, sys.z_hat, rcond=None)
    sys_degenerate = kernels.DecorrelatedSystem(
        sys.x_hat @ beta, sys.x_hat, sys.phi_eps_hat, sys.combine
    )
    with pytest.raises(NumericalError):
        kernels.draw_w(sys_degenerate, beta, ds.m * ds.n, make_rng(0))


def test_sigma_tau_univariate_matches_inverse_gamma_mean():
    rng = make_rng(7)
    n = 15
    resid = rng.standard_normal((n, 1)) * 2.0 + 0.4
    phi = np.array([0.7])
    phi_eps = np.array([0.9])
    w, v0 = 1.4, 5.0
    v0_scale = np.array([[0.6]])
    whitened = (resid[:, 0] - w * phi_eps[0]) / phi[0]
    scale = v0_scale[0, 0] + (whitened @ whitened) / w
    want = scale / (v0 + n - 2.0)  # inverse-gamma mean, df = v0 + n
    draws = np.array([
        kernels.draw_sigma_tau(resid, phi, phi_eps, w, v0, v0_scale, rng)[0, 0]
        for _ in range(200_000)
    ])
    assert abs(draws.mean() - want) < 0.01 * want


def test_phi_walk_matches_quadrature():
    rng = make_rng(8)
    n = 20
    resid = np.abs(rng.standard_normal((n, 1))) * 1.5
    psi_tilde = np.array([2.0])
    sigma_tau = np.array([[1.3]])
    w = 0.9

    def density(phi):
        core = resid[:, 0] / phi - w * psi_tilde[0]
        return phi ** (-n) * np.exp(-0.5 / w * (core @ core) / sigma_tau[0, 0])

    norm, _ = integrate.quad(density, 1e-6, 50.0)
    want, _ = integrate.quad(lambda p: p * density(p), 1e-6, 50.0)
    want /= norm

    phi = np.array([1.0])
    total = 0.0
    iters = 120_000
    for _ in range(iters):
        phi, _ = kernels.draw_phi_mh(phi, resid, psi_tilde, sigma_tau, w, 0.6, rng)
        total += phi[0]
    assert abs(total / iters - want) < 0.02 * want


def test_phi_walk_zero_step_never_moves():
    rng = make_rng(9)
    resid = rng.standard_normal((6, 2))
    phi = np.array([0.7, 1.1])
    new, accepts = kernels.draw_phi_mh(phi, resid, np.array([1.0, -1.0]),
                                       np.eye(2), 1.0, 0.0, rng)
    np.testing.assert_array_equal(new, phi)
    assert accepts.all()  # zero-step proposals equal the current state
