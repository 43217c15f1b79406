"""Variance DyBM G-DyBM(d, k), the GARCH(p, q) reference, and multi-step variance forecasts.

The variance DyBM predicts

    sigma2_t = v0 + sum_i w_i e2_{t-i} + sum_j u_j B_j,

where ``B_j`` is a decayed sum of the squared errors older than the ``d`` lags.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exceptions import DataError, DivergenceError, ForecastError


@dataclass
class VarModelParams:
    v0: float
    w: np.ndarray
    u: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self):
        self.v0 = float(self.v0)
        self.w = np.atleast_1d(np.asarray(self.w, dtype=float))
        self.u = np.atleast_1d(np.asarray(self.u, dtype=float))
        self.lambdas = np.atleast_1d(np.asarray(self.lambdas, dtype=float))

    @property
    def d(self):
        return self.w.shape[0]

    @property
    def k(self):
        return self.u.shape[0]

    @property
    def theta(self):
        return np.concatenate([[self.v0], self.w, self.u])

    def validate(self):
        if self.u.shape != self.lambdas.shape:
            raise DataError("one decay rate per trace weight is required")
        if np.any((self.lambdas <= 0.0) | (self.lambdas >= 1.0)):
            raise DataError("decay rates must lie in the open interval (0, 1)")
        if np.any(self.theta < 0.0) or not np.all(np.isfinite(self.theta)):
            raise DataError("variance coefficients must be finite and nonnegative")
        return self

    def to_dict(self):
        return {
            "d": self.d,
            "k": self.k,
            "lambdas": self.lambdas.tolist(),
            "v0": self.v0,
            "w": self.w.tolist(),
            "u": self.u.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["v0"], doc["w"], doc["u"], doc["lambdas"]).validate()


@dataclass
class VarModelState:
    """``err_fifo[i]`` is e2 ``i + 1`` steps back; ``traces[j]`` is B_j."""

    err_fifo: np.ndarray
    traces: np.ndarray


def new_var_state(params):
    return VarModelState(np.zeros(params.d), np.zeros(params.k))


def predict_variance(params, state):
    return float(params.v0 + params.w @ state.err_fifo + params.u @ state.traces)


def advance_var_state(state, e_t, lambdas):
    """Dequeue the oldest squared error, fold ``B_j <- lambda_j (e2_old + B_j)``, enqueue ``e_t**2``."""
    oldest = state.err_fifo[-1] if state.err_fifo.size else e_t * e_t
    state.err_fifo[1:] = state.err_fifo[:-1].copy()
    if state.err_fifo.size:
        state.err_fifo[0] = e_t * e_t
    state.traces[:] = np.asarray(lambdas) * (oldest + state.traces)
    return state


def var_design(errors, d, lambdas, state=None):
    """Rows ``[1, e2_{t-1}, ..., e2_{t-d}, B_1, ..., B_k]`` seen before each step.

    ``state`` (zero history by default) is advanced through ``errors``.
    """
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    e2 = np.ascontiguousarray(np.asarray(errors, dtype=float).ravel() ** 2)
    if state is None:
        state = VarModelState(np.zeros(d), np.zeros(lambdas.size))
    out = np.empty((e2.size, 1 + d + lambdas.size))
    kernels.var_features(e2, lambdas, state.err_fifo, state.traces, out)
    return out, state


def var_filter(params, errors, state=None):
    """One-step variance predictions over an error sequence."""
    phi, state = var_design(errors, params.d, params.lambdas, state)
    return phi @ params.theta


@dataclass
class GarchParams:
    a0: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a0 = float(self.a0)
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))

    @property
    def p(self):
        return self.a.shape[0]

    @property
    def q(self):
        return self.b.shape[0]

    def validate(self):
        if not self.a0 > 0 or np.any(self.a < 0) or np.any(self.b < 0):
            raise DataError("GARCH needs a0 > 0 and nonnegative a, b")
        return self

    @property
    def persistence(self):
        return float(self.a.sum() + self.b.sum())

    @property
    def long_run_variance(self):
        if self.persistence >= 1.0:
            raise ForecastError("nonstationary GARCH has no long-run variance")
        return self.a0 / (1.0 - self.persistence)

    def to_dict(self):
        return {"p": self.p, "q": self.q, "a0": self.a0, "a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["a0"], doc["a"], doc["b"]).validate()


def map_garch_to_dybm11(g):
    """G-DyBM(1,1) with ``v0 = a0/(1-b1)``, ``w1 = u1 = a1``, ``lambda1 = b1``."""
    if g.p != 1 or g.q != 1:
        raise DataError("mapping is defined for GARCH(1,1) only")
    a1, b1 = float(g.a[0]), float(g.b[0])
    if b1 >= 1.0:
        raise DataError("b1 must be below 1")
    if b1 <= 0.0:
        raise DataError("b1 = 0 leaves no trace mode (decay must lie in (0, 1))")
    return VarModelParams(g.a0 / (1.0 - b1), [a1], [a1], [b1]).validate()


def garch_predict(params, e2_history, sigma2_history):
    """Next variance from histories ordered oldest to newest; missing lags count as zero."""
    e2 = np.asarray(e2_history, dtype=float)[::-1]
    s2 = np.asarray(sigma2_history, dtype=float)[::-1]
    total = params.a0
    for i, a in enumerate(params.a):
        if i < e2.size:
            total += a * e2[i]
    for i, b in enumerate(params.b):
        if i < s2.size:
            total += b * s2[i]
    return float(total)


def garch_filter(params, errors, sigma2_init=None):
    """Conditional variances ``sigma2_0..sigma2_{T-1}``.

    ``sigma2_0`` defaults to the sample variance (mean square) of the errors;
    pre-sample squared errors are zero.
    """
    e2 = np.ascontiguousarray(np.asarray(errors, dtype=float).ravel() ** 2)
    if sigma2_init is None:
        sigma2_init = float(e2.mean()) if e2.size else params.a0
    out = np.empty_like(e2)
    kernels.garch_filter(e2, params.a0, params.a, params.b, float(sigma2_init), out)
    return out


def garch_forecast_n(params, sigma2_t, n):
    """``sigma2 + (a1 + b1)**n (sigma2_t - sigma2)`` with ``sigma2`` the long-run variance."""
    if params.p != 1 or params.q != 1:
        raise DataError("closed-form forecast is defined for GARCH(1,1) only")
    persistence = params.persistence
    if persistence >= 1.0:
        raise ForecastError("a1 + b1 must be below 1")
    n = np.asarray(n)
    if np.any(n < 0):
        raise DataError("horizon must be nonnegative")
    lr = params.a0 / (1.0 - persistence)
    out = lr + persistence**n * (sigma2_t - lr)
    return float(out) if out.ndim == 0 else out


@dataclass
class ForecastConstants:
    alpha_c: float
    beta_c: float
    gamma_c: float
    r1: float
    r2: float
    C0: float
    C1: float
    C2: float

    def to_dict(self):
        return dict(self.__dict__)


def _check_11(params):
    if params.d != 1 or params.k != 1:
        raise DataError("multi-step forecasts are defined for G-DyBM(1,1)")
    return params.v0, float(params.w[0]), float(params.u[0]), float(params.lambdas[0])


def forecast_constants(params, sigma2_t, e2_prev):
    """Constants of ``sigma2_{t+n} = alpha + C0 + C1 r1**n + C2 r2**n``.

    Raises ForecastError when the characteristic roots are complex or repeated;
    use ``dybm_var_forecast_recursive`` then. ``w1 + lambda1`` may exceed 1:
    the form only needs it to differ from 1, and the roots decide convergence.
    """
    v0, w1, u1, lam = _check_11(params)
    beta = w1 + lam
    if beta == 1.0:
        raise ForecastError("w1 + lambda1 = 1 leaves alpha undefined; use the recursive forecaster")
    alpha = v0 * (1.0 - lam) / (1.0 - beta)
    gamma = lam * (u1 - w1)
    disc = beta * beta + 4.0 * gamma
    if disc <= 0.0:
        raise ForecastError("characteristic roots are complex or repeated; use the recursive forecaster")
    root = math.sqrt(disc)
    r1 = 0.5 * (beta + root)
    r2 = 0.5 * (beta - root)
    if gamma == 0.0:
        r2 = 0.0
    if 1.0 - beta - gamma == 0.0:
        raise ForecastError("unit root: 1 - beta - gamma = 0")
    C0 = gamma * alpha / (1.0 - beta - gamma)
    S_t = sigma2_t - alpha
    common = gamma * e2_prev - C0 * (1.0 - beta)
    C1 = (common + r1 * (S_t - C0)) / (r1 - r2)
    C2 = 0.0 if gamma == 0.0 else -(common + r2 * (S_t - C0)) / (r1 - r2)
    return ForecastConstants(alpha, beta, gamma, r1, r2, C0, C1, C2)


def dybm_var_forecast_closed(c, n):
    n = np.asarray(n)
    if np.any(n < 0):
        raise DataError("horizon must be nonnegative")
    out = c.alpha_c + c.C0 + c.C1 * c.r1**n
    if c.C2 != 0.0:
        out = out + c.C2 * c.r2**n
    return float(out) if np.ndim(out) == 0 else out


def dybm_var_forecast_path(params, sigma2_t, e2_prev, horizon):
    """Recursive forecasts for n = 0..horizon.

    The first step uses the observed ``e2_prev`` and replaces the unobserved
    current squared error by ``sigma2_t``; later steps replace every future
    squared error by its forecast variance.
    """
    v0, w1, u1, lam = _check_11(params)
    if horizon < 0:
        raise DataError("horizon must be nonnegative")
    drift = v0 * (1.0 - lam)
    beta = w1 + lam
    gamma = lam * (u1 - w1)
    path = np.empty(horizon + 1)
    path[0] = sigma2_t
    prev2, prev1 = e2_prev, sigma2_t
    for n in range(1, horizon + 1):
        path[n] = drift + beta * prev1 + gamma * prev2
        prev2, prev1 = prev1, path[n]
    return path


def dybm_var_forecast_recursive(params, sigma2_t, e2_prev, n):
    return float(dybm_var_forecast_path(params, sigma2_t, e2_prev, int(n))[-1])


def fit_variance_batch(errors, d, lambdas, l1_weight=0.0, iters=20000, step=None):
    """Fit (v0, w, u) by projected gradient descent with fixed decay rates.

    Minimises ``sum_t (sigma2_t - e2_t)**2 + l1_weight * ||theta||_1`` subject to
    ``theta >= 0``. Each coordinate's step is ``step / G_ii`` with ``G`` the
    Gram matrix of the design; the default ``step`` is ``1 / (2 lambda_max)`` of
    the diagonally normalised Gram matrix, which guarantees descent. Returns the
    best iterate.
    """
    errors = np.asarray(errors, dtype=float).ravel()
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if errors.size <= d + 10:
        raise DataError(f"need more than {d + 10} errors to fit")
    phi, _ = var_design(errors, d, lambdas)
    y = errors**2
    G = phi.T @ phi
    h = phi.T @ y
    diag = np.diag(G).copy()
    diag[diag <= 0.0] = 1.0
    if step is None:
        scaled = G / np.sqrt(np.outer(diag, diag))
        step = 1.0 / (2.0 * np.linalg.eigvalsh(scaled)[-1])
    steps = step / diag
    theta0 = np.zeros(G.shape[0])
    theta0[0] = y.mean()
    theta, best_j = kernels.projected_gd(
        G, h, float(y @ y), theta0, float(l1_weight), steps, int(iters)
    )
    if not np.isfinite(best_j):
        raise DivergenceError("variance fit diverged; lower the step size")
    return VarModelParams(theta[0], theta[1:1 + d], theta[1 + d:], lambdas).validate()


def garch_loglik(params, errors, sigma2_init=None):
    """Gaussian quasi log-likelihood ``sum -0.5 (ln sigma2_t + e2_t / sigma2_t)``."""
    s2 = garch_filter(params, errors, sigma2_init)
    if np.any(s2 <= 0.0):
        return -np.inf
    e2 = np.asarray(errors, dtype=float).ravel() ** 2
    return float(-0.5 * np.sum(np.log(s2) + e2 / s2))


MAX_PERSISTENCE = 0.999


def fit_garch11_qmle(errors, a1_grid=None, b1_grid=None, tol=1e-7, max_sweeps=2000):
    """GARCH(1,1) by Gaussian quasi-maximum likelihood.

    A grid over (a1, b1) with a0 tied to the sample variance picks the start;
    coordinate search on (a0, a1, b1) with step halving refines it.
    """
    e = np.asarray(errors, dtype=float).ravel()
    if e.size < 100:
        raise DataError("need at least 100 errors for a GARCH fit")
    if not np.all(np.isfinite(e)):
        raise DataError("nonfinite errors")
    var = float(np.mean(e * e))
    if var <= 0.0:
        raise DataError("errors are all zero")
    a1_grid = np.linspace(0.0, 0.5, 26) if a1_grid is None else a1_grid
    b1_grid = np.linspace(0.0, 0.98, 50) if b1_grid is None else b1_grid

    def ll(x):
        a0, a1, b1 = x
        if a0 <= 0 or a1 < 0 or b1 < 0 or a1 + b1 > MAX_PERSISTENCE:
            return -np.inf
        return garch_loglik(GarchParams(a0, [a1], [b1]), e, sigma2_init=var)

    best_x, best_ll = None, -np.inf
    for a1 in a1_grid:
        for b1 in b1_grid:
            if a1 + b1 > MAX_PERSISTENCE:
                continue
            x = (max(var * (1.0 - a1 - b1), 1e-12), a1, b1)
            val = ll(x)
            if val > best_ll:
                best_x, best_ll = x, val
    x = np.array(best_x, dtype=float)
    steps = np.array([0.1 * x[0], 0.01, 0.01])
    for _ in range(max_sweeps):
        improved = False
        for i in range(3):
            for sign in (1.0, -1.0):
                cand = x.copy()
                cand[i] += sign * steps[i]
                val = ll(cand)
                if val > best_ll:
                    x, best_ll, improved = cand, val, True
                    break
        if not improved:
            steps *= 0.5
            if np.all(steps[1:] < tol) and steps[0] < tol * max(x[0], 1e-12):
                break
    return GarchParams(x[0], [x[1]], [x[2]]).validate()
