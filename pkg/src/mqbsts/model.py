"""Core domain types: quantile specification, dataset, the asymmetric-Laplace
quantile link, pinball loss, and the stacked matrix form of the regression."""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class QuantileSpec:
    """Target quantile levels, one per series, each strictly inside (0, 1)."""

    tau: np.ndarray

    def __post_init__(self):
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if tau.ndim != 1 or tau.size == 0:
            raise ValueError("tau must be a nonempty vector")
        if np.any(tau <= 0.0) or np.any(tau >= 1.0):
            raise ValueError(f"every quantile must lie in (0, 1), got {tau}")
        object.__setattr__(self, "tau", tau)

    @property
    def m(self):
        return self.tau.size

    @property
    def psi_tilde(self):
        """Skewness loadings (1 - 2*tau) / (tau * (1 - tau)).

        This sign puts the tau-th quantile of the resulting asymmetric Laplace
        error at zero: P(error <= 0) = tau.
        """
        return (1.0 - 2.0 * self.tau) / (self.tau * (1.0 - self.tau))

    @property
    def psi_diag(self):
        """Diagonal of the scale factor: sqrt(2 / (tau * (1 - tau)))."""
        return np.sqrt(2.0 / (self.tau * (1.0 - self.tau)))


@dataclass(frozen=True)
class Dataset:
    """A complete panel: n x m targets plus one n x k_i predictor pool per series."""

    y: np.ndarray
    predictors: tuple
    series_names: tuple
    predictor_names: tuple  # tuple of per-series name tuples

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 2:
            raise DataError(f"target matrix must be 2-D, got shape {y.shape}")
        preds = tuple(np.asarray(x, dtype=float) for x in self.predictors)
        if len(preds) != y.shape[1]:
            raise DataError(
                f"{y.shape[1]} series but {len(preds)} predictor matrices"
            )
        for i, x in enumerate(preds):
            if x.ndim != 2 or x.shape[0] != y.shape[0]:
                raise DataError(
                    f"predictor matrix {i} has shape {x.shape}, expected ({y.shape[0]}, k)"
                )
        if not np.all(np.isfinite(y)) or any(not np.all(np.isfinite(x)) for x in preds):
            raise DataError("dataset contains non-finite values; complete panels are required")
        if len(self.series_names) != y.shape[1]:
            raise DataError("series_names length does not match the number of series")
        if len(self.predictor_names) != len(preds) or any(
            len(names) != x.shape[1] for names, x in zip(self.predictor_names, preds)
        ):
            raise DataError("predictor_names do not match predictor matrix shapes")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "predictors", preds)
        object.__setattr__(self, "series_names", tuple(self.series_names))
        object.__setattr__(self, "predictor_names", tuple(tuple(p) for p in self.predictor_names))

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def m(self):
        return self.y.shape[1]

    @property
    def k(self):
        return tuple(x.shape[1] for x in self.predictors)

    @property
    def total_predictors(self):
        return sum(self.k)

    def coefficient_labels(self):
        return [
            f"{series}.{pred}"
            for series, names in zip(self.series_names, self.predictor_names)
            for pred in names
        ]

    def slices(self):
        """Per-series index slices into the stacked K-dimensional coefficient vector."""
        out, offset = [], 0
        for ki in self.k:
            out.append(slice(offset, offset + ki))
            offset += ki
        return out

    def subset(self, n_rows):
        """First n_rows observations of every series and predictor pool."""
        if not 1 <= n_rows <= self.n:
            raise ValueError(f"n_rows must be in [1, {self.n}], got {n_rows}")
        return Dataset(
            self.y[:n_rows],
            tuple(x[:n_rows] for x in self.predictors),
            self.series_names,
            self.predictor_names,
        )

    def fingerprint(self):
        digest = hashlib.sha256()
        digest.update(repr((self.y.shape, self.k)).encode())
        digest.update(np.ascontiguousarray(self.y).tobytes())
        for x in self.predictors:
            digest.update(np.ascontiguousarray(x).tobytes())
        return digest.hexdigest()[:16]


def make_dataset(y, predictors, series_names=None, predictor_names=None):
    """Dataset with default labels (series1.., x1..) where names are omitted."""
    y = np.asarray(y, dtype=float)
    predictors = tuple(np.asarray(x, dtype=float) for x in predictors)
    if series_names is None:
        series_names = tuple(f"series{i + 1}" for i in range(y.shape[1]))
    if predictor_names is None:
        predictor_names = tuple(
            tuple(f"x{j + 1}" for j in range(x.shape[1])) for x in predictors
        )
    return Dataset(y, predictors, tuple(series_names), tuple(predictor_names))


@dataclass(frozen=True)
class LinkParams:
    """Asymmetric-Laplace error parameters tying the regression to its quantiles.

    phi_eps = Phi @ psi_tilde and Sigma_eps = Phi @ Sigma_tau @ Phi with
    Sigma_tau = Psi @ Sigma_corr @ Psi.
    """

    phi_diag: np.ndarray
    tau: QuantileSpec
    sigma_corr: np.ndarray
    phi_tilde: np.ndarray = field(init=False)
    psi: np.ndarray = field(init=False)
    sigma_tau: np.ndarray = field(init=False)
    phi_eps: np.ndarray = field(init=False)
    sigma_eps: np.ndarray = field(init=False)

    def __post_init__(self):
        phi_diag = np.atleast_1d(np.asarray(self.phi_diag, dtype=float))
        sigma_corr = np.asarray(self.sigma_corr, dtype=float)
        if phi_diag.size != self.tau.m:
            raise ValueError("phi_diag length does not match the quantile vector")
        if np.any(phi_diag <= 0.0):
            raise ValueError("phi_diag must be strictly positive")
        if sigma_corr.shape != (self.tau.m, self.tau.m):
            raise ValueError("sigma_corr has the wrong shape")
        if np.abs(np.diag(sigma_corr) - 1.0).max() > 1e-8:
            raise ValueError("sigma_corr must have a unit diagonal")
        psi = self.tau.psi_diag
        sigma_tau = (psi[:, None] * sigma_corr) * psi[None, :]
        object.__setattr__(self, "phi_diag", phi_diag)
        object.__setattr__(self, "sigma_corr", sigma_corr)
        object.__setattr__(self, "phi_tilde", self.tau.psi_tilde)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "sigma_tau", sigma_tau)
        object.__setattr__(self, "phi_eps", phi_diag * self.tau.psi_tilde)
        object.__setattr__(
            self, "sigma_eps", (phi_diag[:, None] * sigma_tau) * phi_diag[None, :]
        )


def build_link(phi_diag, tau, sigma_corr):
    """Assemble LinkParams from the scale diagonal, quantiles, and correlation matrix."""
    return LinkParams(np.asarray(phi_diag, dtype=float), tau, np.asarray(sigma_corr, dtype=float))


def sigma_eps_from(phi_diag, sigma_tau):
    """Error covariance Phi @ Sigma_tau @ Phi for a free (not correlation-form) Sigma_tau."""
    phi_diag = np.asarray(phi_diag, dtype=float)
    return (phi_diag[:, None] * sigma_tau) * phi_diag[None, :]


def quantile_loss(u, p):
    """Pinball loss (|u| + (2p - 1) * u) / 2; p*u for u >= 0 and (p-1)*u otherwise."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    u = np.asarray(u, dtype=float)
    out = 0.5 * (np.abs(u) + (2.0 * p - 1.0) * u)
    return float(out) if out.ndim == 0 else out


def design_tensor(dataset):
    """(m, n, K) tensor whose i-th slab holds X_i in its own column block.

    Reshaping to (m*n, K) gives the block-diagonal stacked design.
    """
    n, m, K = dataset.n, dataset.m, dataset.total_predictors
    tensor = np.zeros((m, n, K))
    for i, (x, sl) in enumerate(zip(dataset.predictors, dataset.slices())):
        tensor[i, :, sl] = x
    return tensor


def assemble_block_X(dataset):
    """Block-diagonal (m*n) x K design matrix, series-major row order."""
    return design_tensor(dataset).reshape(dataset.m * dataset.n, dataset.total_predictors)


def vectorize_by_series(Z):
    """Stack an n x m matrix series-major: entry (i*n + t) is Z[t, i]."""
    return np.asarray(Z, dtype=float).T.reshape(-1)


def devectorize_by_series(z, n, m):
    """Inverse of vectorize_by_series."""
    return np.asarray(z, dtype=float).reshape(m, n).T


def regression_fit(dataset, beta):
    """Per-series fitted values X_i @ beta_i as an n x m matrix."""
    beta = np.asarray(beta, dtype=float)
    fit = np.empty((dataset.n, dataset.m))
    for i, (x, sl) in enumerate(zip(dataset.predictors, dataset.slices())):
        fit[:, i] = x @ beta[sl]
    return fit


def restrict(obj, gamma):
    """Drop the coordinates (vector entries or matrix columns/rows) where gamma is 0.

    A square K x K matrix is restricted on both axes; an all-zero gamma yields
    an empty restriction, which downstream treats as a vanishing regression term.
    """
    gamma = np.asarray(gamma)
    keep = np.flatnonzero(gamma)
    obj = np.asarray(obj)
    if obj.ndim == 1:
        if obj.size != gamma.size:
            raise ValueError("vector length does not match gamma")
        return obj[keep]
    if obj.ndim == 2:
        if obj.shape[1] != gamma.size:
            raise ValueError("matrix column count does not match gamma")
        if obj.shape[0] == gamma.size == obj.shape[1]:
            return obj[np.ix_(keep, keep)]
        return obj[:, keep]
    raise ValueError("restrict expects a vector or matrix")


@dataclass
class RegressionState:
    """Inclusion indicators and the full-length coefficient vector."""

    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.int8)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.gamma.shape != self.beta.shape:
            raise ValueError("gamma and beta must have the same length")
        if np.any(self.beta[self.gamma == 0] != 0.0):
            raise ValueError("beta must be zero wherever gamma is zero")
