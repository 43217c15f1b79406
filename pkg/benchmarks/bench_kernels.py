"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once on both backends to warm up (and compile), then the best
of ``--repeat`` runs is reported. Outputs are checked for agreement.
"""
import argparse
import time

import numpy as np

from dybm_vol.kernels import GAUSSIAN, GENERALIZED, get_backend


def mean_case(rng, T=5000, N=1, d=66, K=2, mode=GAUSSIAN):
    X = rng.standard_normal((T, N))

    def run(k):
        L = d - 1
        b, W, U = np.zeros(N), np.zeros((L, N, N)), np.zeros((K, N, N))
        acc = (np.zeros(N), np.zeros((L, N, N)), np.zeros((K, N, N)))
        preds = np.empty((T, N))
        k.mean_pass(X, b, W, U, np.array([0.1, 0.9]), np.ones(N), np.zeros((L, N)),
                    np.zeros((K, N)), 0.01, True, mode, np.full(N, 1.5), np.full(N, 0.5),
                    1e-8, False, True, *acc, preds)
        return preds

    return run


def var_features_case(rng, T=200000, d=5, K=2):
    e2 = rng.standard_normal(T) ** 2

    def run(k):
        out = np.empty((T, 1 + d + K))
        k.var_features(e2, np.array([0.5, 0.97]), np.zeros(d), np.zeros(K), out)
        return out

    return run


def garch_case(rng, T=200000):
    e2 = rng.standard_normal(T) ** 2

    def run(k):
        out = np.empty(T)
        k.garch_filter(e2, 0.1, np.array([0.1]), np.array([0.8]), 1.0, out)
        return out

    return run


def pgd_case(rng, P=3, iters=20000):
    A = rng.standard_normal((500, P))
    G, h = A.T @ A, A.T @ rng.standard_normal(500)
    steps = 0.25 / np.diag(G)

    def run(k):
        theta, _ = k.projected_gd(G, h, 1.0, np.zeros(P), 0.0, steps, iters)
        return theta

    return run


# (case, rtol). The objective is flat at the optimum, so a last-bit difference
# in J between summation orders moves the best iterate by about sqrt(eps).
CASES = {
    "mean_pass gaussian (T=5000, d=66)": (mean_case, 1e-9),
    "mean_pass generalized (T=5000, d=66)": (lambda rng: mean_case(rng, mode=GENERALIZED), 1e-9),
    "var_features (T=200000)": (var_features_case, 1e-9),
    "garch_filter (T=200000)": (garch_case, 1e-9),
    "projected_gd (20000 iters)": (pgd_case, 1e-7),
}


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = [get_backend("numba"), get_backend("numpy")]
    print(f"{'kernel':40s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, (make, rtol) in CASES.items():
        run = make(np.random.default_rng(0))
        outs = [run(k) for k in backends]
        if not np.allclose(outs[0], outs[1], rtol=rtol, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        t_nb, t_np = (best_time(lambda k=k: run(k), args.repeat) for k in backends)
        print(f"{name:40s} {1e3 * t_nb:10.2f} {1e3 * t_np:10.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
