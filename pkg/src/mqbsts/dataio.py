"""CSV and JSON serialization: dataset files, truth sidecars, draw tables,
and flat key=value config files.

Dataset CSV schema: header row; column "t" (integer time index), "y.<series>"
target columns, and "x.<series>.<predictor>" per-series predictor pools.

Draws table column order: iteration, W, phi.<series>, st.<i>.<j> (vech of the
error-base covariance, lower triangle stacked by columns), gamma.<label>,
beta.<label>, then -- when the trend is enabled -- smu.<i>.<j> and
sdelta.<i>.<j> vech blocks plus mu_last.<series> and delta_last.<series>
(the final trend state, required to restart forecasting from a stored file).
"""

import json

import numpy as np
import pandas as pd

from .errors import DataError
from .model import Dataset, QuantileSpec
from .trainer import McmcConfig, McmcDraw, PosteriorSample
from .trend import TrendHyper


def write_dataset_csv(dataset, path):
    data = {"t": np.arange(1, dataset.n + 1)}
    for i, name in enumerate(dataset.series_names):
        data[f"y.{name}"] = dataset.y[:, i]
    for name, x, prednames in zip(dataset.series_names, dataset.predictors, dataset.predictor_names):
        for j, pred in enumerate(prednames):
            data[f"x.{name}.{pred}"] = x[:, j]
    pd.DataFrame(data).to_csv(path, index=False, lineterminator="\n")


def read_dataset_csv(path):
    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read dataset CSV {path}: {exc}") from exc
    series, pred_cols = [], {}
    for col in frame.columns:
        if col == "t":
            continue
        parts = col.split(".")
        if parts[0] == "y" and len(parts) == 2:
            series.append(parts[1])
        elif parts[0] == "x" and len(parts) >= 3:
            pred_cols.setdefault(parts[1], []).append((".".join(parts[2:]), col))
        else:
            raise DataError(f"unrecognized column '{col}' in {path}")
    if not series:
        raise DataError(f"no target columns (y.<series>) found in {path}")
    if frame.isna().any().any():
        bad = frame.columns[frame.isna().any()][0]
        raise DataError(f"NaN cells in column '{bad}' of {path}")
    y = frame[[f"y.{s}" for s in series]].to_numpy(dtype=float)
    predictors, predictor_names = [], []
    for s in series:
        cols = pred_cols.get(s, [])
        predictor_names.append(tuple(name for name, _ in cols))
        if cols:
            predictors.append(frame[[col for _, col in cols]].to_numpy(dtype=float))
        else:
            predictors.append(np.zeros((len(frame), 0)))
    return Dataset(y, tuple(predictors), tuple(series), tuple(predictor_names))


def write_truth_json(truth, path):
    payload = {
        key: value.tolist() if isinstance(value, np.ndarray) else value
        for key, value in truth.items()
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=1)
        handle.write("\n")


def _vech_labels(prefix, dim):
    return [f"{prefix}.{i + 1}.{j + 1}" for j in range(dim) for i in range(j, dim)]


def _vech(matrix):
    dim = matrix.shape[0]
    return np.concatenate([matrix[j:, j] for j in range(dim)])


def _unvech(values, dim):
    out = np.zeros((dim, dim))
    pos = 0
    for j in range(dim):
        out[j:, j] = values[pos:pos + dim - j]
        out[j, j:] = out[j:, j]
        pos += dim - j
    return out


def draws_frame(sample):
    """Flat per-draw table in the documented column order."""
    m = sample.dataset_shape[1]
    labels = sample.coefficient_labels
    trend_on = sample.trend.enabled
    columns = ["iteration", "W"]
    columns += [f"phi.{s}" for s in sample.series_names]
    columns += _vech_labels("st", m)
    columns += [f"gamma.{lab}" for lab in labels]
    columns += [f"beta.{lab}" for lab in labels]
    if trend_on:
        columns += _vech_labels("smu", m) + _vech_labels("sdelta", m)
        columns += [f"mu_last.{s}" for s in sample.series_names]
        columns += [f"delta_last.{s}" for s in sample.series_names]
    rows = []
    for draw in sample.draws:
        row = [draw.iteration, draw.w]
        row += list(draw.phi_diag)
        row += list(_vech(draw.sigma_tau))
        row += list(draw.gamma.astype(int))
        row += list(draw.beta)
        if trend_on:
            row += list(_vech(draw.sigma_mu)) + list(_vech(draw.sigma_delta))
            row += list(draw.mu[-1]) + list(draw.delta[-1])
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def sample_metadata(sample):
    config = sample.config
    return {
        "tau": sample.tau.tau.tolist(),
        "series_names": list(sample.series_names),
        "predictor_names": [list(p) for p in sample.predictor_names],
        "dataset_fingerprint": sample.dataset_fingerprint,
        "dataset_shape": list(sample.dataset_shape),
        "iterations": config.iterations,
        "burn_in": config.burn_in,
        "seed": config.seed,
        "threshold_inclusion": config.threshold_inclusion,
        "trend_enabled": sample.trend.enabled,
        "trend_d": sample.trend.d.tolist(),
        "trend_lambda": sample.trend.lam.tolist(),
        "consistent_w_exponent": config.consistent_w_exponent,
        "phi_acceptance": sample.phi_acceptance.tolist(),
    }


def write_posterior(sample, draws_path, meta_path):
    draws_frame(sample).to_csv(draws_path, index=False, lineterminator="\n")
    with open(meta_path, "w") as handle:
        json.dump(sample_metadata(sample), handle, indent=1)
        handle.write("\n")


def read_posterior(draws_path, meta_path):
    """Reconstruct a PosteriorSample (forecast-sufficient fields) from files."""
    try:
        frame = pd.read_csv(draws_path)
        with open(meta_path) as handle:
            meta = json.load(handle)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read posterior files: {exc}") from exc
    tau = QuantileSpec(np.asarray(meta["tau"], dtype=float))
    m = len(meta["series_names"])
    trend_on = bool(meta["trend_enabled"])
    hyper = TrendHyper(trend_on, np.asarray(meta["trend_d"]), np.asarray(meta["trend_lambda"]))
    labels = [
        f"{series}.{pred}"
        for series, preds in zip(meta["series_names"], meta["predictor_names"])
        for pred in preds
    ]
    draws = []
    for _, row in frame.iterrows():
        gamma = np.array([row[f"gamma.{lab}"] for lab in labels], dtype=np.int8)
        beta = np.array([row[f"beta.{lab}"] for lab in labels])
        sigma_tau = _unvech(
            np.array([row[c] for c in _vech_labels("st", m)]), m
        )
        kwargs = {}
        if trend_on:
            kwargs["sigma_mu"] = _unvech(np.array([row[c] for c in _vech_labels("smu", m)]), m)
            kwargs["sigma_delta"] = _unvech(
                np.array([row[c] for c in _vech_labels("sdelta", m)]), m
            )
            mu_last = np.array([row[f"mu_last.{s}"] for s in meta["series_names"]])
            delta_last = np.array([row[f"delta_last.{s}"] for s in meta["series_names"]])
            kwargs["mu"] = mu_last[None, :]
            kwargs["delta"] = delta_last[None, :]
        draws.append(McmcDraw(
            iteration=int(row["iteration"]),
            gamma=gamma,
            beta=beta,
            sigma_tau=sigma_tau,
            phi_diag=np.array([row[f"phi.{s}"] for s in meta["series_names"]]),
            w=float(row["W"]),
            **kwargs,
        ))
    config = McmcConfig(
        iterations=int(meta["iterations"]),
        burn_in=int(meta["burn_in"]),
        seed=int(meta["seed"]),
        threshold_inclusion=float(meta["threshold_inclusion"]),
        consistent_w_exponent=bool(meta["consistent_w_exponent"]),
        trend=hyper,
    )
    shape = tuple(meta["dataset_shape"])
    return PosteriorSample(
        draws=draws,
        config=config,
        tau=tau,
        trend=hyper,
        series_names=tuple(meta["series_names"]),
        predictor_names=tuple(tuple(p) for p in meta["predictor_names"]),
        coefficient_labels=labels,
        dataset_fingerprint=meta["dataset_fingerprint"],
        dataset_shape=shape,
        phi_acceptance=np.asarray(meta["phi_acceptance"]),
    )


def read_config_file(path):
    """Flat `key = value` config file; '#' starts a comment; unknown keys rejected."""
    known = {
        "iterations", "burn_in", "seed", "threshold", "rho", "n", "tau",
        "steps", "kappa", "v0", "r_squared", "nu_alpha", "v_alpha",
        "phi_init", "phi_step", "pi", "no_trend", "trend_d", "trend_lambda",
        "paper_w_exponent",
    }
    values = {}
    try:
        with open(path) as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown config key '{key}'")
        values[key] = value
    return values
