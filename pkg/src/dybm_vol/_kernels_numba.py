"""Scalar-loop versions of the reference kernels, compiled with numba."""
import math

import numpy as np
from numba import njit

GAUSSIAN = 0
GENERALIZED = 1
ADAGRAD_EPS = 1e-8


@njit(cache=True)
def mean_pass(X, b, W, U, lambdas, sigma, fifo, traces, eta, learn, mode,
              rho, beta, eps, learn_sigma, adagrad, acc_b, acc_W, acc_U, preds):
    T, N = X.shape
    L = fifo.shape[0]
    K = traces.shape[0]
    mu = np.empty(N)
    g = np.empty(N)
    for t in range(T):
        for i in range(N):
            acc = b[i]
            for l in range(L):
                for j in range(N):
                    acc += W[l, i, j] * fifo[l, j]
            for k in range(K):
                for j in range(N):
                    acc += U[k, i, j] * traces[k, j]
            mu[i] = acc
            preds[t, i] = acc
        if learn:
            for i in range(N):
                e = X[t, i] - mu[i]
                if mode == GAUSSIAN:
                    g[i] = e / (sigma[i] * sigma[i])
                else:
                    ae = max(abs(e), eps)
                    s = 0.0
                    if e > 0.0:
                        s = 1.0
                    elif e < 0.0:
                        s = -1.0
                    g[i] = beta[i] ** (rho[i] / 2.0) * rho[i] * s * ae ** (rho[i] - 1.0)
                if not math.isfinite(g[i]):
                    return t
                if learn_sigma:
                    sg = sigma[i]
                    sigma[i] = sg + eta * (-1.0 / sg + e * e / (sg * sg * sg))
                    if not math.isfinite(sigma[i]) or sigma[i] <= 0.0:
                        return t
            for i in range(N):
                gi = g[i]
                if adagrad:
                    acc_b[i] += gi * gi
                    b[i] += eta * gi / (math.sqrt(acc_b[i]) + ADAGRAD_EPS)
                    for l in range(L):
                        for j in range(N):
                            gr = gi * fifo[l, j]
                            acc_W[l, i, j] += gr * gr
                            W[l, i, j] += eta * gr / (math.sqrt(acc_W[l, i, j]) + ADAGRAD_EPS)
                    for k in range(K):
                        for j in range(N):
                            gr = gi * traces[k, j]
                            acc_U[k, i, j] += gr * gr
                            U[k, i, j] += eta * gr / (math.sqrt(acc_U[k, i, j]) + ADAGRAD_EPS)
                else:
                    step = eta * gi
                    b[i] += step
                    for l in range(L):
                        for j in range(N):
                            W[l, i, j] += step * fifo[l, j]
                    for k in range(K):
                        for j in range(N):
                            U[k, i, j] += step * traces[k, j]
        for j in range(N):
            oldest = fifo[L - 1, j]
            for l in range(L - 1, 0, -1):
                fifo[l, j] = fifo[l - 1, j]
            fifo[0, j] = X[t, j]
            for k in range(K):
                traces[k, j] = lambdas[k] * traces[k, j] + oldest
    return -1


@njit(cache=True)
def var_features(e2, lambdas, err_fifo, traces, out):
    T = e2.shape[0]
    d = err_fifo.shape[0]
    k = traces.shape[0]
    for t in range(T):
        out[t, 0] = 1.0
        for i in range(d):
            out[t, 1 + i] = err_fifo[i]
        for j in range(k):
            out[t, 1 + d + j] = traces[j]
        if d > 0:
            oldest = err_fifo[d - 1]
            for i in range(d - 1, 0, -1):
                err_fifo[i] = err_fifo[i - 1]
            err_fifo[0] = e2[t]
        else:
            oldest = e2[t]
        for j in range(k):
            traces[j] = lambdas[j] * (oldest + traces[j])


@njit(cache=True)
def garch_filter(e2, a0, a, b, sigma2_init, out):
    T = e2.shape[0]
    p = a.shape[0]
    q = b.shape[0]
    for t in range(T):
        if t == 0:
            out[0] = sigma2_init
            continue
        s = a0
        for i in range(1, p + 1):
            if t - i >= 0:
                s += a[i - 1] * e2[t - i]
        for j in range(1, q + 1):
            if t - j >= 0:
                s += b[j - 1] * out[t - j]
            else:
                s += b[j - 1] * sigma2_init
        out[t] = s


@njit(cache=True)
def projected_gd(G, h, yy, theta, l1, steps, iters):
    p = theta.shape[0]
    theta = np.maximum(theta, 0.0)
    best = theta.copy()
    best_j = theta @ G @ theta - 2.0 * h @ theta + yy + l1 * theta.sum()
    grad = np.empty(p)
    for _ in range(iters):
        for i in range(p):
            acc = -h[i]
            for j in range(p):
                acc += G[i, j] * theta[j]
            grad[i] = 2.0 * acc + l1
        for i in range(p):
            theta[i] = max(theta[i] - steps[i] * grad[i], 0.0)
        j_val = theta @ G @ theta - 2.0 * h @ theta + yy + l1 * theta.sum()
        if not math.isfinite(j_val):
            return best, np.nan
        if j_val < best_j:
            best_j = j_val
            best[:] = theta
    return best, best_j
