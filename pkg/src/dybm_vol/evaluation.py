"""Metrics, synthetic generators and the two experiment harnesses."""
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.signal import lfilter

from . import dybm_mean, dybm_variance, ggd, timeseries_io
from .exceptions import DataError
from .timeseries_io import SeriesFrame


def rmse(pred, truth):
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.size != truth.size or pred.size == 0:
        raise DataError("rmse needs two nonempty sequences of equal length")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def pearson(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size or a.size < 2:
        raise DataError("pearson needs two sequences of equal length >= 2")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise DataError("pearson is undefined for a constant sequence")
    da, db = a - a.mean(), b - b.mean()
    na, nb = np.sqrt(da @ da), np.sqrt(db @ db)
    return float(np.clip((da @ db) / (na * nb), -1.0, 1.0))


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_garch_series(params, n, seed=0, burn=500):
    """Simulate GARCH(1,1) errors; returns ``(errors, true conditional variances)``."""
    if params.p != 1 or params.q != 1:
        raise DataError("generator supports GARCH(1,1) only")
    a0, a1, b1 = params.a0, float(params.a[0]), float(params.b[0])
    s2 = params.long_run_variance
    z = _rng(seed).standard_normal(n + burn)
    e = np.empty(n + burn)
    sig2 = np.empty(n + burn)
    for t in range(n + burn):
        sig2[t] = s2
        e[t] = np.sqrt(s2) * z[t]
        s2 = a0 + a1 * e[t] * e[t] + b1 * s2
    return e[burn:], sig2[burn:]


def gen_var_dybm_series(params, n, seed=0, burn=500):
    """Simulate errors whose variance follows a variance DyBM; returns ``(errors, sigma2)``."""
    params.validate()
    state = dybm_variance.new_var_state(params)
    z = _rng(seed).standard_normal(n + burn)
    e = np.empty(n + burn)
    sig2 = np.empty(n + burn)
    for t in range(n + burn):
        sig2[t] = dybm_variance.predict_variance(params, state)
        e[t] = np.sqrt(sig2[t]) * z[t]
        dybm_variance.advance_var_state(state, e[t], params.lambdas)
    return e[burn:], sig2[burn:]


def gen_ar_ggd_series(phi, p, n, seed=0, burn=500):
    """AR(1) ``x_t = phi x_{t-1} + eps_t`` with generalized Gaussian innovations."""
    if not abs(phi) < 1:
        raise DataError("AR coefficient must satisfy |phi| < 1")
    eps = ggd.sample_ggd(0.0, p, n + burn, _rng(seed))
    x = lfilter([1.0], [1.0, -phi], eps)
    return SeriesFrame.from_array(x[burn:], names=["x"])


@dataclass
class ExperimentConfig:
    data_path: str = None
    value_column: str = None
    generator: dict = None
    train_len: int = None
    d: int = 66
    lambdas: list = field(default_factory=lambda: [0.1, 0.9])
    eta: float = 0.01
    epochs: int = 5
    readjust_period: int = 100
    seed: int = 0
    lambda_var: float = 0.97
    l1_weight: float = 0.0
    optimizer: str = "adagrad"
    var_iters: int = 20000
    report_runtime: bool = False

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def validate(self):
        if (self.data_path is None) == (self.generator is None):
            raise DataError("config needs exactly one of data_path or generator")
        if self.d < 2:
            raise DataError("lag d must be at least 2")
        if not self.lambdas or any(not 0 < lam < 1 for lam in self.lambdas):
            raise DataError("decay rates must lie in (0, 1)")
        if not self.eta > 0 or self.epochs < 0 or self.readjust_period < 2:
            raise DataError("need eta > 0, epochs >= 0 and readjust_period >= 2")
        if not 0 < self.lambda_var < 1 or self.l1_weight < 0:
            raise DataError("need lambda_var in (0, 1) and l1_weight >= 0")
        return self

    def to_dict(self):
        return asdict(self)


def generate(gen, seed):
    """Build a series from a generator description ``{"kind": "ar_ggd" | "garch", ...}``.

    Returns ``(SeriesFrame, true conditional variance or None)``.
    """
    gen = dict(gen)
    kind = gen.pop("kind", "ar_ggd")
    n = int(gen.pop("n", 6000))
    if kind == "ar_ggd":
        p = ggd.GGDParams(gen.pop("rho", 1.0), gen.pop("beta", 1.0))
        phi = gen.pop("phi", 0.6)
        out = gen_ar_ggd_series(phi, p, n, seed), None
    elif kind == "garch":
        g = dybm_variance.GarchParams(gen.pop("a0", 0.1), [gen.pop("a1", 0.1)], [gen.pop("b1", 0.8)])
        e, s2 = gen_garch_series(g.validate(), n, seed)
        out = SeriesFrame.from_array(e, names=["e"]), s2
    else:
        raise DataError(f"unknown generator kind {kind!r}")
    if gen:
        raise DataError(f"unknown generator keys: {sorted(gen)}")
    return out


def load_returns(cfg):
    if cfg.data_path is not None:
        prices = timeseries_io.load_price_csv(cfg.data_path, cfg.value_column)
        return timeseries_io.to_returns(prices), None
    return generate(cfg.generator, cfg.seed)


def _scaled_split(series, train_len):
    train, test = timeseries_io.split(series, train_len)
    train_s, stats = timeseries_io.standardize(train)
    test_s, _ = timeseries_io.standardize(test, stats)
    return train_s, test_s


def _scalar(a):
    a = np.atleast_1d(a)
    return float(a[0]) if a.size == 1 else a.tolist()


def run_mean_experiment(cfg):
    """Train the Gaussian and generalized Gaussian DyBMs on identical data and settings.

    Pipeline: prices -> returns -> split -> scale both parts by the training std.
    Both models then predict the whole series with frozen parameters, starting
    from an empty history, so test predictions see the training history.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    start = time.perf_counter()
    series, _ = load_returns(cfg)
    train_len = len(series) - 66 if cfg.train_len is None else cfg.train_len
    train, test = _scaled_split(series, train_len)
    full = timeseries_io.concat(train, test).values
    N = train.dim

    params, state = dybm_mean.new_mean_model(N, cfg.d, cfg.lambdas)
    dybm_mean.train_online(params, state, train, cfg.epochs, cfg.eta, optimizer=cfg.optimizer)
    pred_g, _ = dybm_mean.predict_series(params, full)

    gparams, gstate = dybm_mean.new_mean_model(N, cfg.d, cfg.lambdas)
    gparams, shape, _ = ggd.ggd_train_online(
        gparams, gstate, train, cfg.epochs, cfg.eta, period=cfg.readjust_period,
        optimizer=cfg.optimizer,
    )
    pred_q, _ = dybm_mean.predict_series(gparams, full)

    report = {
        "rmse_train_gaussian": rmse(pred_g[:train_len], full[:train_len]),
        "rmse_test_gaussian": rmse(pred_g[train_len:], full[train_len:]),
        "rmse_train_ggd": rmse(pred_q[:train_len], full[:train_len]),
        "rmse_test_ggd": rmse(pred_q[train_len:], full[train_len:]),
        "final_rho": _scalar(shape.rho),
        "final_beta": _scalar(shape.beta),
        "n_train": train_len,
        "n_test": len(series) - train_len,
    }
    if cfg.report_runtime:
        report["runtime_seconds"] = time.perf_counter() - start
    report["config"] = cfg.to_dict()
    return report


def residual_series(cfg, series, train_len):
    """Residuals of a Gaussian DyBM trained on the first ``train_len`` points, over the whole series."""
    train, test = _scaled_split(series, train_len)
    full = timeseries_io.concat(train, test).values
    params, state = dybm_mean.new_mean_model(train.dim, cfg.d, cfg.lambdas)
    dybm_mean.train_online(params, state, train, cfg.epochs, cfg.eta, optimizer=cfg.optimizer)
    pred, _ = dybm_mean.predict_series(params, full)
    return (full - pred)[:, 0]


def _pearson_or_none(a, b):
    # a fitted model with no ARCH effect predicts a constant variance
    try:
        return pearson(a, b)
    except DataError:
        return None


def run_variance_experiment(cfg):
    """GARCH(1,1) by QMLE against G-DyBM(1,1) by batch fit, both on the first split.

    With a ``garch`` generator the simulated errors are used directly; otherwise
    the errors are residuals of a Gaussian DyBM mean model. Reports
    Pearson(predicted sigma2_t, e_t**2) on both splits.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    start = time.perf_counter()
    series, true_s2 = load_returns(cfg)
    T = len(series)
    h = T // 2 if cfg.train_len is None else cfg.train_len
    if not 0 < h < T:
        raise DataError(f"train_len must be in (0, {T})")
    if cfg.generator is not None and cfg.generator.get("kind") == "garch":
        e = series.values[:, 0]
    else:
        e = residual_series(cfg, series, h)
    e2 = e * e

    garch = dybm_variance.fit_garch11_qmle(e[:h])
    s2_garch = dybm_variance.garch_filter(garch, e, sigma2_init=float(np.mean(e2[:h])))
    var_model = dybm_variance.fit_variance_batch(
        e[:h], 1, [cfg.lambda_var], l1_weight=cfg.l1_weight, iters=cfg.var_iters
    )
    s2_dybm = dybm_variance.var_filter(var_model, e)

    report = {
        "pearson_train_garch": _pearson_or_none(s2_garch[:h], e2[:h]),
        "pearson_test_garch": _pearson_or_none(s2_garch[h:], e2[h:]),
        "pearson_train_dybm": _pearson_or_none(s2_dybm[:h], e2[:h]),
        "pearson_test_dybm": _pearson_or_none(s2_dybm[h:], e2[h:]),
        "garch": garch.to_dict(),
        "dybm": var_model.to_dict(),
        "n_train": h,
        "n_test": T - h,
    }
    if true_s2 is not None:
        report["pearson_true_sigma2_garch"] = _pearson_or_none(s2_garch, true_s2)
        report["pearson_true_sigma2_dybm"] = _pearson_or_none(s2_dybm, true_s2)
    if cfg.report_runtime:
        report["runtime_seconds"] = time.perf_counter() - start
    report["config"] = cfg.to_dict()
    return report
