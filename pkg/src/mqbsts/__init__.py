"""Multivariate quantile Bayesian structural time series: Gibbs-sampler
training with spike-and-slab quantile feature selection and model-averaged
joint quantile forecasting."""

from .errors import DataError, MqbstsError, NumericalError
from .model import Dataset, QuantileSpec, build_link, make_dataset, quantile_loss
from .trainer import McmcConfig, PosteriorSample, inclusion_probabilities, train
from .forecast import baseline_empirical_quantile, forecast_one_step, rolling_evaluate
from .simulate import SimConfig, generate

__all__ = [
    "DataError", "MqbstsError", "NumericalError",
    "Dataset", "QuantileSpec", "build_link", "make_dataset", "quantile_loss",
    "McmcConfig", "PosteriorSample", "inclusion_probabilities", "train",
    "baseline_empirical_quantile", "forecast_one_step", "rolling_evaluate",
    "SimConfig", "generate",
]
