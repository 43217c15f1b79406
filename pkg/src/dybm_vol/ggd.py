"""Generalized Gaussian observation noise for the DyBM.

Density: ``sqrt(beta) / (2 Gamma(1 + 1/rho)) * exp(-beta**(rho/2) |x - mu|**rho)``.
``rho = 2`` is Gaussian with ``beta = 1 / (2 sigma**2)``; ``rho = 1`` is Laplacian.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import dybm_mean, kernels
from .exceptions import DataError, DivergenceError

EPS = 1e-8
RHO_MIN, RHO_MAX = 0.1, 20.0
C_MIN, C_MAX = 1e-4, 0.75 - 1e-6
# Upper end of the first branch of the piecewise shape approximation.
C_BRANCH1 = 0.131246


@dataclass
class GGDParams:
    """Shape ``rho`` and inverse-variance ``beta``; scalars or one entry per dimension."""

    rho: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if np.any(~(self.rho > 0)) or np.any(~(self.beta > 0)):
            raise DataError("rho and beta must be positive")
        if not (np.all(np.isfinite(self.rho)) and np.all(np.isfinite(self.beta))):
            raise DataError("rho and beta must be finite")

    @classmethod
    def gaussian(cls, N=1, sigma=1.0):
        return cls(np.full(N, 2.0), np.full(N, 0.5 / sigma**2))

    def copy(self):
        return GGDParams(self.rho.copy(), self.beta.copy())


def digamma(x):
    """Psi(x) for x > 0: shift upward with Psi(x) = Psi(x + 1) - 1/x, then the asymptotic series."""
    x = float(x)
    if x <= 0.0:
        raise ValueError("digamma is only implemented for positive arguments")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (
        1.0 / 240 - inv2 * (1.0 / 132 - inv2 * 691.0 / 32760)))))
    return acc + math.log(x) - 0.5 / x - series


def ggd_logpdf(x, mu, p):
    e = np.abs(np.asarray(x, dtype=float) - mu)
    lg = np.vectorize(math.lgamma)(1.0 + 1.0 / p.rho)
    return 0.5 * np.log(p.beta) - math.log(2.0) - lg - p.beta ** (p.rho / 2.0) * e**p.rho


def _abs_resid(x, mu):
    return np.maximum(np.abs(np.asarray(x, dtype=float) - mu), EPS)


def grad_beta(x, mu, p):
    ae = _abs_resid(x, mu)
    return 0.5 / p.beta - 0.5 * p.rho * p.beta ** (p.rho / 2.0 - 1.0) * ae**p.rho


def grad_rho(x, mu, p):
    ae = _abs_resid(x, mu)
    z = p.beta * ae * ae
    psi = np.vectorize(digamma)(1.0 + 1.0 / p.rho)
    return psi / p.rho**2 - 0.5 * z ** (p.rho / 2.0) * np.log(z)


def grad_mu(x, mu, p):
    e = np.asarray(x, dtype=float) - mu
    ae = np.maximum(np.abs(e), EPS)
    return p.beta ** (p.rho / 2.0) * p.rho * np.sign(e) * ae ** (p.rho - 1.0)


def _nonzero_residuals(residuals):
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise DataError("no residuals")
    if not np.any(np.abs(r) > EPS):
        raise DataError("all residuals are zero; degenerate fit")
    return r


def mle_beta(residuals, rho, axis=None):
    """Closed-form maximiser of the summed log-likelihood in beta for fixed rho."""
    r = _nonzero_residuals(residuals)
    ae = np.maximum(np.abs(r), EPS)
    n = r.size if axis is None else r.shape[axis]
    return (n / (rho * np.sum(ae**rho, axis=axis))) ** (2.0 / rho)


def moment_ratio_c(residuals):
    """``(mean |e|)**2 / mean e**2``; 1/2 for Laplacian, 2/pi for Gaussian data."""
    r = _nonzero_residuals(residuals)
    return float(np.mean(np.abs(r)) ** 2 / np.mean(r * r))


def c_of_rho(rho):
    """Population moment ratio ``Gamma(2/rho)**2 / (Gamma(1/rho) Gamma(3/rho))``, increasing in rho."""
    return math.exp(2.0 * math.lgamma(2.0 / rho) - math.lgamma(1.0 / rho) - math.lgamma(3.0 / rho))


def rho_from_c(c, method="bisection", tol=1e-10):
    """Shape parameter whose population moment ratio equals ``c``.

    The result saturates at [0.1, 20]. ``method="piecewise"`` uses the
    closed-form small-c branch below 0.131246 and bisection elsewhere.
    """
    if not 0.0 < c < 0.75:
        raise DataError(f"moment ratio must lie in (0, 0.75), got {c}")
    if method == "piecewise" and c < C_BRANCH1:
        rho = 2.0 * math.log(27.0 / 16.0) / math.log(3.0 / (4.0 * c * c))
        return min(max(rho, RHO_MIN), RHO_MAX)
    if method not in ("bisection", "piecewise"):
        raise DataError(f"unknown method {method!r}")
    lo, hi = RHO_MIN, RHO_MAX
    if c <= c_of_rho(lo):
        return lo
    if c >= c_of_rho(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if c_of_rho(mid) < c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_ggd(mu, p, n, seed=None):
    """Draw ``n`` values: ``mu + s * z**(1/rho) / sqrt(beta)``, z ~ Gamma(1/rho), s = +-1.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rho, beta = float(p.rho), float(p.beta)
    z = rng.gamma(1.0 / rho, 1.0, size=n)
    s = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return mu + s * z ** (1.0 / rho) / math.sqrt(beta)


class ResidualBuffer:
    """Sliding window of the most recent ``period`` residual vectors."""

    def __init__(self, period, N=1):
        if period < 2:
            raise DataError("readjust period must be at least 2")
        self.period = int(period)
        self._data = np.zeros((self.period, N))
        self._count = 0

    def push(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if not np.all(np.isfinite(rows)):
            raise DataError("nonfinite residual")
        for row in rows[-self.period:]:
            self._data[self._count % self.period] = row
            self._count += 1

    @property
    def full(self):
        return self._count >= self.period

    def window(self):
        """Stored residuals in arrival order, shape (min(count, period), N)."""
        if not self.full:
            return self._data[: self._count].copy()
        start = self._count % self.period
        return np.roll(self._data, -start, axis=0)


def readjust(params, buffer, order="rho_first", method="bisection"):
    """Re-estimate (rho, beta) per dimension from the residual window.

    ``order="rho_first"`` estimates the shape, then beta under the new shape;
    ``"beta_first"`` computes beta under the current shape before updating rho.
    """
    if not buffer.full:
        raise DataError("residual buffer is not full")
    window = buffer.window()
    N = window.shape[1]
    rho = np.broadcast_to(params.rho, (N,)).copy()
    beta = np.broadcast_to(params.beta, (N,)).copy()
    for j in range(N):
        r = window[:, j]
        c = min(max(moment_ratio_c(r), C_MIN), C_MAX)
        new_rho = rho_from_c(c, method=method)
        if order == "rho_first":
            beta[j] = mle_beta(r, new_rho)
        elif order == "beta_first":
            beta[j] = mle_beta(r, rho[j])
        else:
            raise DataError(f"unknown order {order!r}")
        rho[j] = new_rho
    return GGDParams(rho, beta)


def ggd_train_online(params, state, series, epochs, eta, period=100, ggd=None,
                     readjust_enabled=True, order="rho_first", record="final", eps=EPS,
                     optimizer="sgd"):
    """Online training of the DyBM mean under generalized Gaussian noise.

    The mean weights follow the mu-score of the generalized Gaussian chained
    through the linear predictor. Every ``period`` updates (counted across
    epochs) rho and beta are re-estimated from the last ``period`` residuals;
    in between they stay fixed. Returns ``(params, ggd_params, predictions)``.
    """
    if period < 2:
        raise DataError("readjust period must be at least 2")
    if not eta > 0:
        raise DataError("learning rate must be positive")
    if record not in ("final", "first_epoch", "last_epoch"):
        raise DataError(f"unknown record mode {record!r}")
    X = dybm_mean._values(series)
    N = X.shape[1]
    ggd = GGDParams.gaussian(N) if ggd is None else GGDParams(
        np.broadcast_to(ggd.rho, (N,)).copy(), np.broadcast_to(ggd.beta, (N,)).copy()
    )
    buffer = ResidualBuffer(period, N)
    opt = dybm_mean.make_optimizer(optimizer, params)
    n_updates = 0
    recorded = None
    T = X.shape[0]
    for epoch in range(epochs):
        fresh = dybm_mean.new_state(params)
        state.fifo[:], state.traces[:] = fresh.fifo, fresh.traces
        preds = np.empty_like(X)
        start = 0
        while start < T:
            stop = min(T, start + period - n_updates % period)
            chunk = X[start:stop]
            preds[start:stop] = dybm_mean.run_pass(
                params, state, chunk, eta=eta, learn=True,
                mode=kernels.GENERALIZED, rho=ggd.rho, beta=ggd.beta, eps=eps, optimizer=opt,
            )
            buffer.push(chunk - preds[start:stop])
            n_updates += stop - start
            if readjust_enabled and n_updates % period == 0:
                ggd = readjust(ggd, buffer, order=order)
            start = stop
        if not all(np.all(np.isfinite(a)) for a in (params.b, params.W, params.U)):
            raise DivergenceError("nonfinite parameters after training epoch")
        if (record == "first_epoch" and epoch == 0) or record == "last_epoch":
            recorded = preds
    if epochs == 0:
        return params, ggd, np.empty((0, N))
    if record == "final":
        recorded, _ = dybm_mean.predict_series(params, X, state=_reset(params, state))
    return params, ggd, recorded


def _reset(params, state):
    fresh = dybm_mean.new_state(params)
    state.fifo[:], state.traces[:] = fresh.fifo, fresh.traces
    return state


def ggd_to_dict(p, period):
    return {
        "rho": np.atleast_1d(p.rho).tolist(),
        "beta": np.atleast_1d(p.beta).tolist(),
        "readjust_period": int(period),
    }


def ggd_from_dict(doc):
    return GGDParams(doc["rho"], doc["beta"]), int(doc.get("readjust_period", 100))
