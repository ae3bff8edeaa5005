"""Batch command-line front end: simulate, train, forecast, evaluate.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
The default output directory honors the MQBSTS_OUTDIR environment variable
and is overridden by --out.
"""

import argparse
import concurrent.futures
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import dataio, forecast, simulate, trainer
from .errors import DataError, NumericalError
from .model import QuantileSpec
from .trend import TrendHyper

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _parse_tau(text, m=None):
    values = np.array([float(v) for v in text.split(",")])
    if m is not None and values.size == 1:
        values = np.repeat(values, m)
    return QuantileSpec(values)


def _parse_vector(text):
    return np.array([float(v) for v in text.split(",")])


def _out_dir(args):
    out = args.out or os.environ.get("MQBSTS_OUTDIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_config_file(args, parser):
    if not getattr(args, "config", None):
        return args
    sub = parser.command_parsers[args.command]
    values = dataio.read_config_file(args.config)
    casts = {
        "iterations": int, "burn_in": int, "seed": int, "steps": int, "n": int,
        "threshold": float, "rho": float, "kappa": float, "v0": float,
        "r_squared": float, "nu_alpha": float, "v_alpha": float,
        "phi_step": float, "pi": float,
        "tau": str, "phi_init": str, "trend_d": str, "trend_lambda": str,
        "no_trend": lambda v: v.lower() in ("1", "true", "yes"),
        "paper_w_exponent": lambda v: v.lower() in ("1", "true", "yes"),
    }
    for key, raw in values.items():
        if not hasattr(args, key):
            continue  # key is valid globally but not for this command
        if sub.get_default(key) == getattr(args, key):  # flags beat file values
            setattr(args, key, casts[key](raw))
    return args


def _mcmc_config(args, m):
    trend = None
    if args.no_trend:
        trend = TrendHyper(False, np.zeros(m), np.ones(m))
    elif args.trend_d is not None or args.trend_lambda is not None:
        d = _parse_vector(args.trend_d) if args.trend_d else np.zeros(m)
        lam = _parse_vector(args.trend_lambda) if args.trend_lambda else np.ones(m)
        trend = TrendHyper(True, d, lam)
    phi_init = _parse_vector(args.phi_init) if args.phi_init else 0.1
    return trainer.McmcConfig(
        iterations=args.iterations,
        burn_in=args.burn_in,
        seed=args.seed,
        threshold_inclusion=args.threshold,
        phi_init=phi_init,
        phi_step=args.phi_step,
        pi=args.pi,
        kappa=args.kappa,
        r_squared=args.r_squared,
        v0=args.v0,
        nu_alpha=args.nu_alpha,
        v_alpha=args.v_alpha,
        consistent_w_exponent=not args.paper_w_exponent,
        trend=trend,
    )


def _add_train_flags(sub):
    sub.add_argument("--iterations", type=int, default=400)
    sub.add_argument("--burn-in", dest="burn_in", type=int, default=200)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threshold", type=float, default=0.8)
    sub.add_argument("--phi-init", dest="phi_init", default=None,
                     help="comma-separated positive scale initial values")
    sub.add_argument("--phi-step", dest="phi_step", type=float, default=0.05)
    sub.add_argument("--pi", type=float, default=0.5, help="prior inclusion probability")
    sub.add_argument("--kappa", type=float, default=0.01)
    sub.add_argument("--v0", type=float, default=5.0)
    sub.add_argument("--r-squared", dest="r_squared", type=float, default=0.8)
    sub.add_argument("--nu-alpha", dest="nu_alpha", type=float, default=0.01)
    sub.add_argument("--v-alpha", dest="v_alpha", type=float, default=0.01)
    sub.add_argument("--no-trend", dest="no_trend", action="store_true")
    sub.add_argument("--trend-d", dest="trend_d", default=None)
    sub.add_argument("--trend-lambda", dest="trend_lambda", default=None)
    sub.add_argument("--paper-w-exponent", dest="paper_w_exponent", action="store_true",
                     help="use the literal 1 - n/2 mixing exponent")
    sub.add_argument("--config", default=None, help="flat key=value config file")


def build_parser():
    parser = argparse.ArgumentParser(prog="mqbsts")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="write a synthetic dataset CSV and truth sidecar")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--tau", default="0.9,0.9,0.9")
    sim.add_argument("--rho", type=float, default=0.7)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=None)

    tr = subs.add_parser("train", help="train and write draw/inclusion/coefficient tables")
    tr.add_argument("--data", required=True)
    tr.add_argument("--tau", required=True, help="comma-separated, or one value for all series")
    tr.add_argument("--out", default=None)
    tr.add_argument("--chains", type=int, default=1)
    _add_train_flags(tr)

    fc = subs.add_parser("forecast", help="one-step forecast from stored draws")
    fc.add_argument("--draws", required=True)
    fc.add_argument("--meta", required=True)
    fc.add_argument("--future", required=True, help="CSV with the x.* columns at t+1")
    fc.add_argument("--seed", type=int, default=0)
    fc.add_argument("--out", default=None)

    ev = subs.add_parser("evaluate", help="rolling one-step-ahead quantile-loss evaluation")
    ev.add_argument("--data", required=True)
    ev.add_argument("--tau", required=True)
    ev.add_argument("--steps", type=int, required=True)
    ev.add_argument("--out", default=None)
    ev.add_argument("--no-refit", dest="no_refit", action="store_true")
    _add_train_flags(ev)
    parser.command_parsers = {"simulate": sim, "train": tr, "forecast": fc, "evaluate": ev}
    return parser


def cmd_simulate(args):
    config = simulate.SimConfig(n=args.n, tau=tuple(_parse_tau(args.tau).tau),
                                rho=args.rho, seed=args.seed)
    dataset, truth = simulate.generate(config)
    out = _out_dir(args)
    dataio.write_dataset_csv(dataset, out / "dataset.csv")
    dataio.write_truth_json(truth, out / "truth.json")
    print(f"wrote {out / 'dataset.csv'} ({dataset.n} rows, {dataset.m} series, "
          f"{dataset.total_predictors} coefficients) and {out / 'truth.json'}")
    return 0


def _train_one(dataset, tau, config):
    return trainer.train(dataset, tau, config)


def _write_train_outputs(sample, out, suffix=""):
    dataio.write_posterior(sample, out / f"draws{suffix}.csv", out / f"meta{suffix}.json")
    probs = trainer.inclusion_probabilities(sample)
    selected = probs >= sample.config.threshold_inclusion
    pd.DataFrame({
        "coefficient": list(sample.coefficient_labels),
        "inclusion_probability": probs,
        "selected": selected.astype(int),
    }).to_csv(out / f"inclusion{suffix}.csv", index=False, lineterminator="\n")
    summary = trainer.posterior_coefficient_summary(sample)
    pd.DataFrame({
        "coefficient": summary["labels"],
        "mean": summary["mean"],
        "sd": summary["sd"],
    }).to_csv(out / f"coefficients{suffix}.csv", index=False, lineterminator="\n")
    return probs, selected


def cmd_train(args, parser):
    args = _apply_config_file(args, parser)
    dataset = dataio.read_dataset_csv(args.data)
    tau = _parse_tau(args.tau, dataset.m)
    config = _mcmc_config(args, dataset.m)
    out = _out_dir(args)
    print(f"train: {args.data} | iterations={config.iterations} "
          f"burn_in={config.burn_in} threshold={config.threshold_inclusion} "
          f"tau={list(tau.tau)} seed={config.seed}")
    if args.chains > 1:
        configs = [trainer.with_seed(config, config.seed + c) for c in range(args.chains)]
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.chains) as pool:
            samples = list(pool.map(_train_one, [dataset] * args.chains,
                                    [tau] * args.chains, configs))
        for c, sample in enumerate(samples):
            probs, selected = _write_train_outputs(sample, out, suffix=f"_chain{c}")
            print(f"chain {c}: {int(selected.sum())}/{selected.size} coefficients selected, "
                  f"phi acceptance {np.round(sample.phi_acceptance, 3).tolist()}")
    else:
        sample = trainer.train(dataset, tau, config)
        probs, selected = _write_train_outputs(sample, out)
        print(f"selected {int(selected.sum())}/{selected.size} coefficients "
              f"(threshold {config.threshold_inclusion})")
        print(f"phi acceptance rates: {np.round(sample.phi_acceptance, 3).tolist()}")
    return 0


def cmd_forecast(args):
    sample = dataio.read_posterior(args.draws, args.meta)
    future = pd.read_csv(args.future)
    if future.isna().any().any():
        raise DataError(f"NaN cells in {args.future}")
    new_predictors = []
    for series, preds in zip(sample.series_names, sample.predictor_names):
        cols = [f"x.{series}.{p}" for p in preds]
        missing = [c for c in cols if c not in future.columns]
        if missing:
            raise DataError(f"{args.future} is missing columns {missing}")
        new_predictors.append(future[cols].to_numpy(dtype=float)[0])
    from .distributions import make_rng
    result = forecast.forecast_one_step(sample, new_predictors, rng=make_rng(args.seed))
    out = _out_dir(args)
    pd.DataFrame({
        "series": list(sample.series_names),
        "prediction": result.prediction,
        "trend_part": result.trend_part,
        "regression_part": result.regression_part,
        "error_part": result.error_part,
    }).to_csv(out / "forecast.csv", index=False, lineterminator="\n")
    print(f"wrote {out / 'forecast.csv'}: {np.round(result.prediction, 4).tolist()}")
    return 0


def cmd_evaluate(args, parser):
    args = _apply_config_file(args, parser)
    dataset = dataio.read_dataset_csv(args.data)
    tau = _parse_tau(args.tau, dataset.m)
    config = _mcmc_config(args, dataset.m)
    if args.steps > 0 and dataset.n - args.steps < 10:
        raise ValueError(f"--steps {args.steps} exceeds the data available in {args.data}")
    result = forecast.rolling_evaluate(dataset, tau, config, args.steps,
                                       refit=not args.no_refit)
    out = _out_dir(args)
    rows = {"step": np.arange(1, args.steps + 1)}
    for i, name in enumerate(dataset.series_names):
        rows[f"prediction.{name}"] = result.predictions[:, i]
        rows[f"realized.{name}"] = result.realized[:, i]
        rows[f"baseline.{name}"] = result.baseline_predictions[:, i]
    rows["step_loss"] = result.step_loss
    rows["cumulative_loss"] = result.cumulative_loss
    rows["baseline_step_loss"] = result.baseline_step_loss
    rows["baseline_cumulative_loss"] = result.baseline_cumulative_loss
    pd.DataFrame(rows).to_csv(out / "evaluation.csv", index=False, lineterminator="\n")
    if args.steps > 0:
        print(f"wrote {out / 'evaluation.csv'}: cumulative loss "
              f"{result.cumulative_loss[-1]:.4f} vs baseline "
              f"{result.baseline_cumulative_loss[-1]:.4f}")
    else:
        print(f"wrote {out / 'evaluation.csv'} (empty trajectory)")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "train":
            return cmd_train(args, parser)
        if args.command == "forecast":
            return cmd_forecast(args)
        if args.command == "evaluate":
            return cmd_evaluate(args, parser)
        parser.error(f"unknown command {args.command}")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
