"""``dybm-vol`` command-line interface."""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dybm_mean, dybm_variance, evaluation, ggd, timeseries_io
from .exceptions import DybmError
from .timeseries_io import SeriesFrame, dumps_report

CHECK_TOL = 1e-6


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_series(args):
    return timeseries_io.load_price_csv(args.data, args.column)


def _hyper(p, lag_default=66, decay_help="decay rate (repeatable)"):
    p.add_argument("--lag", type=int, default=lag_default, help="lag horizon d")
    p.add_argument("--decay", type=float, action="append", help=decay_help)
    p.add_argument("--lr", type=float, default=0.01, help="learning rate")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--optimizer", choices=["sgd", "adagrad"], default="sgd")


def _validate_hyper(args):
    if args.lag < 2:
        raise DybmError("--lag must be at least 2")
    if not args.lr > 0:
        raise DybmError("--lr must be positive")
    if args.epochs < 0:
        raise DybmError("--epochs must be nonnegative")


def cmd_ingest(args):
    prices = _load_series(args)
    returns = timeseries_io.to_returns(prices)
    if args.train_len:
        train, _ = timeseries_io.split(returns, args.train_len)
        _, stats = timeseries_io.standardize(train)
    else:
        stats = None
    scaled, stats = timeseries_io.standardize(returns, stats)
    timeseries_io.write_series_csv(scaled, args.out)
    if args.scaling_out:
        timeseries_io.write_report_json(stats.to_dict(), args.scaling_out)


def _train(args, generalized):
    _validate_hyper(args)
    series = _load_series(args)
    decays = args.decay or [0.1, 0.9]
    params, state = dybm_mean.new_mean_model(series.dim, args.lag, decays)
    if generalized:
        params, shape, preds = ggd.ggd_train_online(
            params, state, series, args.epochs, args.lr, period=args.readjust_period,
            optimizer=args.optimizer,
        )
        doc = {**params.to_dict(), **ggd.ggd_to_dict(shape, args.readjust_period)}
    else:
        params, preds = dybm_mean.train_online(
            params, state, series, args.epochs, args.lr, optimizer=args.optimizer
        )
        doc = params.to_dict()
    timeseries_io.write_report_json(doc, args.out)
    if args.predictions and len(preds):
        timeseries_io.write_series_csv(
            SeriesFrame(series.timestamps, preds, list(series.names)), args.predictions
        )


def cmd_train_mean(args):
    _train(args, generalized=False)


def cmd_train_ggd(args):
    _train(args, generalized=True)


def cmd_fit_var(args):
    errors = _load_series(args).values[:, 0]
    decays = args.decay or [0.97]
    model = dybm_variance.fit_variance_batch(
        errors, args.lag, decays, l1_weight=args.l1, iters=args.iters
    )
    timeseries_io.write_report_json(model.to_dict(), args.out)


def cmd_fit_garch(args):
    errors = _load_series(args).values[:, 0]
    timeseries_io.write_report_json(dybm_variance.fit_garch11_qmle(errors).to_dict(), args.out)


def forecast_table(doc, sigma2, e2, horizon, check=False):
    """Forecast rows ``(n, sigma2_{t+n})`` for n = 0..horizon from a model document."""
    if horizon < 0:
        raise DybmError("--horizon must be nonnegative")
    n = np.arange(horizon + 1)
    if "a0" in doc:
        g = dybm_variance.GarchParams.from_dict(doc)
        return list(zip(n, dybm_variance.garch_forecast_n(g, sigma2, n)))
    if e2 is None:
        raise DybmError("--e2 (last squared error) is required for a G-DyBM(1,1) model")
    model = dybm_variance.VarModelParams.from_dict(doc)
    recursive = dybm_variance.dybm_var_forecast_path(model, sigma2, e2, horizon)
    try:
        consts = dybm_variance.forecast_constants(model, sigma2, e2)
    except DybmError:
        if check:
            raise
        return list(zip(n, recursive))
    closed = dybm_variance.dybm_var_forecast_closed(consts, n)
    if check:
        rel = np.abs(closed - recursive) / np.maximum(np.abs(recursive), 1e-300)
        if np.max(rel) > CHECK_TOL:
            raise DybmError(
                f"closed form and recursion disagree: max relative error {np.max(rel):.3e}"
            )
    return list(zip(n, closed))


def cmd_forecast_var(args):
    rows = forecast_table(_read_json(args.model), args.sigma2, args.e2, args.horizon, args.check)
    lines = ["horizon,sigma2"] + [f"{int(k)},{float(v)!r}" for k, v in rows]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_evaluate(args):
    pred = timeseries_io.load_price_csv(args.pred, args.column).values
    truth = timeseries_io.load_price_csv(args.truth, args.column).values
    report = {
        "rmse": evaluation.rmse(pred, truth),
        "pearson": evaluation.pearson(pred, truth),
    }
    _emit(dumps_report(report), args.out)


def _experiment_config(args):
    doc = _read_json(args.config) if args.config else {}
    overrides = {
        "d": args.lag,
        "lambdas": args.decay,
        "eta": args.lr,
        "epochs": args.epochs,
        "readjust_period": args.readjust_period,
        "lambda_var": args.lambda_var,
        "l1_weight": args.l1,
        "seed": args.seed,
        "data_path": args.data,
        "train_len": args.train_len,
        "optimizer": args.optimizer,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return evaluation.ExperimentConfig.from_dict(doc)


def cmd_experiment_mean(args):
    _emit(dumps_report(evaluation.run_mean_experiment(_experiment_config(args))), args.out)


def cmd_experiment_var(args):
    _emit(dumps_report(evaluation.run_variance_experiment(_experiment_config(args))), args.out)


def cmd_gen_data(args):
    if args.kind == "garch":
        gen = {"kind": "garch", "n": args.n, "a0": args.a0, "a1": args.a1, "b1": args.b1}
    else:
        gen = {"kind": "ar_ggd", "n": args.n, "phi": args.phi, "rho": args.rho, "beta": args.beta}
    series, _ = evaluation.generate(gen, args.seed)
    timeseries_io.write_series_csv(series, args.out)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dybm-vol", description="DyBM mean, variance and generalized Gaussian models"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="prices CSV -> scaled returns CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--column", action="append")
    p.add_argument("--train-len", type=int, help="scale by the std of the first N returns")
    p.add_argument("--out", required=True)
    p.add_argument("--scaling-out")
    p.set_defaults(func=cmd_ingest)

    for name, func, generalized, text in (
        ("train-mean", cmd_train_mean, False, "train a Gaussian DyBM online"),
        ("train-ggd", cmd_train_ggd, True, "train a DyBM with generalized Gaussian noise"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--data", required=True)
        p.add_argument("--column", action="append")
        _hyper(p)
        if generalized:
            p.add_argument("--readjust-period", type=int, default=100)
        p.add_argument("--out", required=True, help="model JSON")
        p.add_argument("--predictions", help="CSV of one-step predictions")
        p.set_defaults(func=func)

    p = sub.add_parser("fit-var", help="batch-fit a variance DyBM to an error series")
    p.add_argument("--data", required=True)
    p.add_argument("--column", action="append")
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--decay", type=float, action="append")
    p.add_argument("--l1", type=float, default=0.0)
    p.add_argument("--iters", type=int, default=20000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_var)

    p = sub.add_parser("fit-garch", help="GARCH(1,1) by quasi-maximum likelihood")
    p.add_argument("--data", required=True)
    p.add_argument("--column", action="append")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_garch)

    p = sub.add_parser("forecast-var", help="multi-step variance forecast")
    p.add_argument("--model", required=True)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--e2", type=float)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--check", action="store_true",
                   help="require closed form and recursion to agree to 1e-6")
    p.add_argument("--out")
    p.set_defaults(func=cmd_forecast_var)

    p = sub.add_parser("evaluate", help="RMSE and Pearson between two series CSVs")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--column", action="append")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    for name, func, text in (
        ("experiment-mean", cmd_experiment_mean, "Gaussian vs generalized Gaussian DyBM"),
        ("experiment-var", cmd_experiment_var, "GARCH(1,1) vs G-DyBM(1,1) variance"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config")
        p.add_argument("--data")
        p.add_argument("--train-len", type=int)
        p.add_argument("--lag", type=int)
        p.add_argument("--decay", type=float, action="append")
        p.add_argument("--lr", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--readjust-period", type=int)
        p.add_argument("--lambda-var", type=float)
        p.add_argument("--l1", type=float)
        p.add_argument("--optimizer", choices=["sgd", "adagrad"])
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("gen-data", help="write a synthetic series")
    p.add_argument("--kind", choices=["ar_ggd", "garch"], default="ar_ggd")
    p.add_argument("--n", type=int, default=6000)
    p.add_argument("--phi", type=float, default=0.6)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--a0", type=float, default=0.1)
    p.add_argument("--a1", type=float, default=0.1)
    p.add_argument("--b1", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (DybmError, OSError, KeyError, json.JSONDecodeError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"dybm-vol {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
