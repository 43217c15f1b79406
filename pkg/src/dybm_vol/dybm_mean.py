"""Gaussian DyBM: lag weights plus eligibility traces, learned online by SGD."""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exceptions import DataError, DivergenceError
from .timeseries_io import SeriesFrame

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class MeanModelParams:
    """Bias ``b`` (N,), lag weights ``W`` (d-1, N, N), trace weights ``U`` (K, N, N).

    ``W[l]`` multiplies the observation ``l + 1`` steps back. ``lambdas`` are
    fixed decay rates in (0, 1); ``sigma`` is the per-dimension std.
    """

    b: np.ndarray
    W: np.ndarray
    U: np.ndarray
    lambdas: np.ndarray
    sigma: np.ndarray

    @property
    def N(self):
        return self.b.shape[0]

    @property
    def d(self):
        return self.W.shape[0] + 1

    @property
    def K(self):
        return self.lambdas.shape[0]

    def copy(self):
        return MeanModelParams(
            self.b.copy(), self.W.copy(), self.U.copy(), self.lambdas.copy(), self.sigma.copy()
        )

    def validate(self):
        if np.any((self.lambdas <= 0.0) | (self.lambdas >= 1.0)):
            raise DataError("decay rates must lie in the open interval (0, 1)")
        if np.any(~(self.sigma > 0.0)):
            raise DataError("sigma must be positive")
        for name in ("b", "W", "U"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DataError(f"nonfinite entries in {name}")
        N, L, K = self.N, self.d - 1, self.K
        if self.W.shape != (L, N, N) or self.U.shape != (K, N, N) or self.sigma.shape != (N,):
            raise DataError("inconsistent parameter shapes")
        return self

    def to_dict(self):
        return {
            "N": self.N,
            "d": self.d,
            "lambdas": self.lambdas.tolist(),
            "b": self.b.tolist(),
            "W": self.W.tolist(),
            "U": self.U.tolist(),
            "sigma": self.sigma.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        N, d = int(doc["N"]), int(doc["d"])
        lambdas = np.asarray(doc["lambdas"], dtype=float)
        params = cls(
            b=np.asarray(doc["b"], dtype=float).reshape(N),
            W=np.asarray(doc["W"], dtype=float).reshape(d - 1, N, N),
            U=np.asarray(doc["U"], dtype=float).reshape(lambdas.shape[0], N, N),
            lambdas=lambdas,
            sigma=np.asarray(doc.get("sigma", [1.0] * N), dtype=float).reshape(N),
        )
        return params.validate()


@dataclass
class MeanModelState:
    """``fifo[l]`` is the observation ``l + 1`` steps back; ``traces[k]`` is the trace for decay k."""

    fifo: np.ndarray
    traces: np.ndarray

    def copy(self):
        return MeanModelState(self.fifo.copy(), self.traces.copy())


def new_mean_model(N, d, decays):
    """Zero-initialised model and state for N dimensions, lag horizon d, decay rates ``decays``."""
    decays = np.atleast_1d(np.asarray(decays, dtype=float))
    if N < 1 or d < 2 or decays.size < 1:
        raise DataError("need N >= 1, d >= 2 and at least one decay rate")
    params = MeanModelParams(
        b=np.zeros(N),
        W=np.zeros((d - 1, N, N)),
        U=np.zeros((decays.size, N, N)),
        lambdas=decays,
        sigma=np.ones(N),
    ).validate()
    return params, new_state(params)


def new_state(params):
    return MeanModelState(np.zeros((params.d - 1, params.N)), np.zeros((params.K, params.N)))


def predict_mean(params, state):
    return (
        params.b
        + np.einsum("lij,lj->i", params.W, state.fifo)
        + np.einsum("kij,kj->i", params.U, state.traces)
    )


def gaussian_loglik(x, mu, sigma):
    x, mu, sigma = (np.asarray(a, dtype=float) for a in (x, mu, sigma))
    if np.any(~(sigma > 0)):
        raise DataError("sigma must be positive")
    z = (x - mu) / sigma
    return float(np.sum(-0.5 * LOG_2PI - np.log(sigma) - 0.5 * z * z))


def loglik_gradients(params, state, x):
    """Gradients of the Gaussian log-likelihood of ``x`` w.r.t. every parameter."""
    mu = predict_mean(params, state)
    e = np.asarray(x, dtype=float) - mu
    g = e / params.sigma**2
    return {
        "b": g,
        "W": g[None, :, None] * state.fifo[:, None, :],
        "U": g[None, :, None] * state.traces[:, None, :],
        "sigma": -1.0 / params.sigma + e**2 / params.sigma**3,
    }


def mean_sgd_step(params, state, x_t, eta, learn_sigma=False):
    """One gradient-ascent step on the Gaussian log-likelihood; updates ``params`` in place."""
    if not eta > 0:
        raise DataError("learning rate must be positive")
    grads = loglik_gradients(params, state, x_t)
    if not all(np.all(np.isfinite(v)) for v in grads.values()):
        raise DivergenceError("nonfinite gradient; lower the learning rate")
    params.b += eta * grads["b"]
    params.W += eta * grads["W"]
    params.U += eta * grads["U"]
    if learn_sigma:
        params.sigma += eta * grads["sigma"]
        if np.any(~(params.sigma > 0)):
            raise DivergenceError("sigma left the positive half-line")
    return params


def advance_state(state, x_t, lambdas):
    """Dequeue the oldest lag, fold it into every trace, then enqueue ``x_t``."""
    x_t = np.asarray(x_t, dtype=float)
    oldest = state.fifo[-1].copy()
    state.fifo[1:] = state.fifo[:-1].copy()
    state.fifo[0] = x_t
    state.traces *= np.asarray(lambdas)[:, None]
    state.traces += oldest[None, :]
    return state


@dataclass
class AdaGradState:
    """Accumulated squared gradients for b, W and U."""

    acc_b: np.ndarray
    acc_W: np.ndarray
    acc_U: np.ndarray

    @classmethod
    def zeros_like(cls, params):
        return cls(np.zeros_like(params.b), np.zeros_like(params.W), np.zeros_like(params.U))


_NO_ACC = (np.zeros(0), np.zeros((0, 0, 0)), np.zeros((0, 0, 0)))


def make_optimizer(name, params):
    """``None`` for plain SGD, an ``AdaGradState`` for ``"adagrad"``."""
    if name == "sgd":
        return None
    if name == "adagrad":
        return AdaGradState.zeros_like(params)
    raise DataError(f"unknown optimizer {name!r}")


def _values(series):
    if isinstance(series, SeriesFrame):
        return series.values
    x = np.asarray(series, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def run_pass(params, state, X, eta=0.0, learn=False, learn_sigma=False,
             mode=kernels.GAUSSIAN, rho=None, beta=None, eps=1e-8, optimizer=None):
    """Run the compiled recursion over ``X`` and return the one-step predictions.

    ``params``, ``state`` and ``optimizer`` (an ``AdaGradState`` or ``None`` for
    plain SGD) are updated in place.
    """
    X = np.ascontiguousarray(X, dtype=float)
    if X.shape[1] != params.N:
        raise DataError(f"series has {X.shape[1]} dimensions, model expects {params.N}")
    preds = np.empty_like(X)
    N = params.N
    rho = np.full(N, 2.0) if rho is None else np.ascontiguousarray(rho, dtype=float)
    beta = np.full(N, 0.5) if beta is None else np.ascontiguousarray(beta, dtype=float)
    acc = _NO_ACC if optimizer is None else (optimizer.acc_b, optimizer.acc_W, optimizer.acc_U)
    bad = kernels.mean_pass(
        X, params.b, params.W, params.U, params.lambdas, params.sigma,
        state.fifo, state.traces, float(eta), bool(learn), int(mode),
        rho, beta, float(eps), bool(learn_sigma), optimizer is not None, *acc, preds,
    )
    if bad >= 0:
        raise DivergenceError(f"nonfinite update at step {bad}; lower the learning rate")
    return preds


def predict_series(params, series, state=None):
    """Prediction-only pass (parameters frozen); returns ``(predictions, final state)``."""
    state = new_state(params) if state is None else state
    preds = run_pass(params, state, _values(series))
    return preds, state


def train_online(params, state, series, epochs, eta, record="final", learn_sigma=False,
                 optimizer="sgd"):
    """Online gradient ascent for ``epochs`` passes over ``series``.

    The state is zeroed at the start of every epoch; parameters persist.
    ``record`` chooses which one-step predictions are returned: ``"final"``
    (a prediction-only pass after training), ``"first_epoch"`` or
    ``"last_epoch"`` (online predictions made during that epoch).
    ``optimizer`` is ``"sgd"`` (constant step) or ``"adagrad"``.
    """
    if record not in ("final", "first_epoch", "last_epoch"):
        raise DataError(f"unknown record mode {record!r}")
    if not eta > 0:
        raise DataError("learning rate must be positive")
    X = _values(series)
    opt = make_optimizer(optimizer, params)
    recorded = None
    for epoch in range(epochs):
        fresh = new_state(params)
        state.fifo[:], state.traces[:] = fresh.fifo, fresh.traces
        preds = run_pass(params, state, X, eta=eta, learn=True, learn_sigma=learn_sigma,
                         optimizer=opt)
        if (record == "first_epoch" and epoch == 0) or record == "last_epoch":
            recorded = preds
    if epochs == 0:
        return params, np.empty((0, X.shape[1]))
    if record == "final":
        fresh = new_state(params)
        state.fifo[:], state.traces[:] = fresh.fifo, fresh.traces
        recorded = run_pass(params, state, X)
    return params, recorded
