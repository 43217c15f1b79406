"""Reference kernels written with numpy/scipy array operations.

These run when numba is unavailable or disabled, and serve as the second
implementation the numba kernels are checked against.
"""
import numpy as np
from scipy.signal import lfilter, lfiltic

GAUSSIAN = 0
GENERALIZED = 1
ADAGRAD_EPS = 1e-8


def mean_pass(X, b, W, U, lambdas, sigma, fifo, traces, eta, learn, mode,
              rho, beta, eps, learn_sigma, adagrad, acc_b, acc_W, acc_U, preds):
    """Run the DyBM mean recursion over the rows of ``X``.

    Every array argument except ``X`` is updated in place.  With ``adagrad``
    the steps for b, W, U are divided by the root of the accumulated squared
    gradients ``acc_*``.  Returns the index of the first step that produced a
    nonfinite update, or -1.
    """
    n_lag = fifo.shape[0]
    lam = lambdas[:, None]
    terms = np.empty((1 + n_lag + traces.shape[0], X.shape[1]))
    for t in range(X.shape[0]):
        x = X[t]
        # accumulate b, then lag by lag, then trace by trace (the compiled order)
        terms[0] = b
        terms[1:1 + n_lag] = np.einsum("lij,lj->li", W, fifo)
        terms[1 + n_lag:] = np.einsum("kij,kj->ki", U, traces)
        mu = np.cumsum(terms, axis=0)[-1]
        preds[t] = mu
        if learn:
            e = x - mu
            if mode == GAUSSIAN:
                g = e / sigma**2
            else:
                ae = np.maximum(np.abs(e), eps)
                g = beta ** (rho / 2.0) * rho * np.sign(e) * ae ** (rho - 1.0)
            if not np.all(np.isfinite(g)):
                return t
            if learn_sigma:
                sigma += eta * (-1.0 / sigma + e**2 / sigma**3)
                if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0.0):
                    return t
            gW = g[None, :, None] * fifo[:, None, :]
            gU = g[None, :, None] * traces[:, None, :]
            if adagrad:
                acc_b += g * g
                acc_W += gW * gW
                acc_U += gU * gU
                b += eta * g / (np.sqrt(acc_b) + ADAGRAD_EPS)
                W += eta * gW / (np.sqrt(acc_W) + ADAGRAD_EPS)
                U += eta * gU / (np.sqrt(acc_U) + ADAGRAD_EPS)
            else:
                b += eta * g
                W += eta * gW
                U += eta * gU
        oldest = fifo[n_lag - 1].copy()
        fifo[1:] = fifo[:-1].copy()
        fifo[0] = x
        traces *= lam
        traces += oldest[None, :]
    return -1


def var_features(e2, lambdas, err_fifo, traces, out):
    """Design rows ``[1, e2_{t-1..t-d}, B_1..B_k]`` for every step.

    ``err_fifo`` (newest first) and ``traces`` are advanced in place.
    """
    T = e2.shape[0]
    d = err_fifo.shape[0]
    if T == 0:
        return
    out[:, 0] = 1.0
    # history[j] = e2 at step j - d, oldest first
    history = np.concatenate([err_fifo[::-1], e2])
    for i in range(d):
        out[:, 1 + i] = history[d - 1 - i:d - 1 - i + T]
    dequeued = history[:T]
    for j, lam in enumerate(lambdas):
        zi = lfiltic([lam], [1.0, -lam], [traces[j]])
        after, _ = lfilter([lam], [1.0, -lam], dequeued, zi=zi)
        out[0, 1 + d + j] = traces[j]
        out[1:, 1 + d + j] = after[:-1]
        traces[j] = after[-1]
    err_fifo[:] = history[-d:][::-1]


def garch_filter(e2, a0, a, b, sigma2_init, out):
    """Conditional variances of a GARCH(p, q) recursion.

    ``out[0] = sigma2_init``; pre-sample squared errors are zero and pre-sample
    variances equal ``sigma2_init``.
    """
    T = e2.shape[0]
    if T == 0:
        return
    out[0] = sigma2_init
    if T == 1:
        return
    p, q = a.shape[0], b.shape[0]
    drive = np.full(T - 1, a0)
    padded = np.concatenate([np.zeros(max(p - 1, 0)), e2[:-1]])
    for i in range(p):
        # lag i + 1 for targets t = 1..T-1
        drive += a[i] * padded[p - 1 - i:p - 1 - i + T - 1]
    if q == 0:
        out[1:] = drive
        return
    den = np.concatenate([[1.0], -b])
    zi = lfiltic([1.0], den, np.full(q, sigma2_init))
    out[1:], _ = lfilter([1.0], den, drive, zi=zi)


def projected_gd(G, h, yy, theta, l1, steps, iters):
    """Projected gradient descent on ``J = t'Gt - 2h't + yy + l1*sum(t)``, t >= 0.

    Returns the best iterate by J and its objective value.
    """
    theta = np.maximum(theta, 0.0)
    best = theta.copy()
    best_j = theta @ G @ theta - 2.0 * h @ theta + yy + l1 * theta.sum()
    for _ in range(iters):
        grad = 2.0 * (G @ theta - h) + l1
        theta = np.maximum(theta - steps * grad, 0.0)
        j = theta @ G @ theta - 2.0 * h @ theta + yy + l1 * theta.sum()
        if not np.isfinite(j):
            return best, np.nan
        if j < best_j:
            best_j = j
            best[:] = theta
    return best, best_j
