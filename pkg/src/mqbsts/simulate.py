"""Three-series synthetic data generator used throughout testing and the
reproduction experiments.

The generator produces y_t = mu_t + B' x_t + eps_t with a deterministic
mean-reverting trend, eight shared predictors per series, and an asymmetric
Laplace error built through the quantile link with an equicorrelated base.
"""

from dataclasses import dataclass

import numpy as np

from .distributions import make_rng, sample_mal
from .model import QuantileSpec, build_link, make_dataset
from .trend import TrendHyper

# Fixed generator constants: slope targets and learning rates of the trend,
# the 8 x 3 coefficient matrix (columns are series), and the scale diagonal.
TREND_D = np.array([0.04, 0.05, 0.02])
TREND_LAMBDA = np.array([0.6, 0.3, 0.1])
COEFFICIENTS = np.array([
    [2.0, 3.0, -2.5],
    [4.0, 0.0, 0.0],
    [-3.5, 2.5, -2.0],
    [-2.0, -3.0, -1.0],
    [0.0, 0.0, 3.0],
    [0.0, -1.5, 2.0],
    [-1.6, 0.0, 0.0],
    [0.0, 2.0, 4.0],
])  # (8, 3): entry [j, i] multiplies predictor j in series i
PHI_DIAG = np.array([0.7, 0.6, 0.9])
N_PREDICTORS = 8


@dataclass(frozen=True)
class SimConfig:
    n: int
    tau: tuple = (0.9, 0.9, 0.9)
    rho: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if len(self.tau) != 3:
            raise ValueError("tau must have exactly three entries")
        # 3x3 equicorrelation is PD iff -1/2 < rho < 1
        if not -0.5 < self.rho < 1.0:
            raise ValueError(
                f"rho={self.rho} gives a non-PD equicorrelation matrix (need -0.5 < rho < 1)"
            )


def trend_hyper():
    """The generator's trend constants as trainer hyperparameters."""
    return TrendHyper(True, TREND_D.copy(), TREND_LAMBDA.copy())


def _deterministic_trend(n):
    # Slope starts at its fixed point D, level at zero, so the trend is the
    # cumulative sum of D across seeds.
    delta = np.tile(TREND_D, (n, 1))
    mu = np.vstack([np.zeros(3), np.cumsum(delta, axis=0)[:-1]])
    return mu, delta


def generate(config):
    """Simulate a dataset plus a truth record (coefficients, trend, link).

    Draw order is fixed for reproducibility: predictors first (predictor-major,
    all times of predictor 1, then 2, ...), then the error draws.
    """
    rng = make_rng(config.seed)
    n = config.n
    mu, delta = _deterministic_trend(n)

    x = np.empty((n, N_PREDICTORS))
    x[:, 0] = rng.normal(5.0, 5.0, size=n)
    x[:, 1] = rng.poisson(10.0, size=n)
    x[:, 2] = rng.poisson(5.0, size=n)
    x[:, 3] = rng.normal(-2.0, np.sqrt(5.0), size=n)  # N(-2, 5) read as variance 5
    x[:, 4] = rng.normal(-5.0, 5.0, size=n)
    x[:, 5] = rng.poisson(15.0, size=n)
    x[:, 6] = rng.poisson(20.0, size=n)
    x[:, 7] = rng.normal(0.0, 10.0, size=n)

    tau = QuantileSpec(np.asarray(config.tau, dtype=float))
    sigma_corr = np.full((3, 3), config.rho) + (1.0 - config.rho) * np.eye(3)
    link = build_link(PHI_DIAG, tau, sigma_corr)
    errors = sample_mal(link.phi_eps, link.sigma_eps, rng, size=n)

    y = mu + x @ COEFFICIENTS + errors
    dataset = make_dataset(
        y,
        tuple(x.copy() for _ in range(3)),
        series_names=("series1", "series2", "series3"),
    )
    truth = {
        "coefficients": COEFFICIENTS.copy(),
        "beta_stacked": COEFFICIENTS.T.reshape(-1),  # series-major, matches Dataset labels
        "support": (COEFFICIENTS.T.reshape(-1) != 0.0),
        "mu": mu,
        "delta": delta,
        "trend_d": TREND_D.copy(),
        "trend_lambda": TREND_LAMBDA.copy(),
        "phi_diag": PHI_DIAG.copy(),
        "phi_eps": link.phi_eps,
        "sigma_eps": link.sigma_eps,
        "sigma_tau": link.sigma_tau,
        "tau": tau.tau,
        "rho": config.rho,
        "x4_convention": "N(-2, 5) read as variance 5",
    }
    return dataset, truth
