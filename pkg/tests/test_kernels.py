"""The numba kernels and the numpy reference kernels must agree."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from dybm_vol import kernels
from dybm_vol._accel import HAS_NUMBA

pytestmark = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")


def _mean_inputs(rng, N=2, d=4, K=2):
    return dict(
        X=rng.standard_normal((60, N)),
        b=0.1 * rng.standard_normal(N),
        W=0.1 * rng.standard_normal((d - 1, N, N)),
        U=0.05 * rng.standard_normal((K, N, N)),
        lambdas=np.array([0.3, 0.8])[:K],
        sigma=np.array([1.0, 1.3])[:N],
        fifo=rng.standard_normal((d - 1, N)),
        traces=rng.standard_normal((K, N)),
    )


def _run(backend, inp, **kw):
    a = {k: v.copy() for k, v in inp.items()}
    N = a["b"].size
    preds = np.empty_like(a["X"])
    acc = (np.zeros_like(a["b"]), np.zeros_like(a["W"]), np.zeros_like(a["U"]))
    bad = backend.mean_pass(
        a["X"], a["b"], a["W"], a["U"], a["lambdas"], a["sigma"], a["fifo"], a["traces"],
        0.01, kw.get("learn", True), kw.get("mode", 0),
        np.full(N, kw.get("rho", 2.0)), np.full(N, kw.get("beta", 0.5)), 1e-8,
        kw.get("learn_sigma", False), kw.get("adagrad", False), *acc, preds,
    )
    return bad, preds, a


@pytest.mark.parametrize("mode, rho", [(0, 2.0), (1, 1.3), (1, 0.8)])
@pytest.mark.parametrize("learn_sigma, adagrad", [(False, False), (True, False), (False, True)])
def test_mean_pass_backends_agree(rng, mode, rho, learn_sigma, adagrad):
    inp = _mean_inputs(rng)
    out = [
        _run(kernels.get_backend(name), inp, mode=mode, rho=rho,
             learn_sigma=learn_sigma and mode == 0, adagrad=adagrad)
        for name in ("numpy", "numba")
    ]
    assert out[0][0] == out[1][0] == -1
    assert_allclose(out[0][1], out[1][1], rtol=1e-12, atol=1e-12)
    for key in ("b", "W", "U", "sigma", "fifo", "traces"):
        assert_allclose(out[0][2][key], out[1][2][key], rtol=1e-12, atol=1e-12)


def test_var_features_backends_agree(rng):
    e2 = rng.standard_normal(200) ** 2
    lambdas = np.array([0.5, 0.97])
    res = []
    for name in ("numpy", "numba"):
        fifo = np.array([0.3, 1.2, 0.1])
        traces = np.array([0.4, 2.0])
        out = np.empty((200, 6))
        kernels.get_backend(name).var_features(e2, lambdas, fifo, traces, out)
        res.append((out, fifo, traces))
    for a, b in zip(res[0], res[1]):
        assert_allclose(a, b, rtol=1e-12)


@pytest.mark.parametrize("a, b", [([0.1], [0.8]), ([0.05, 0.1], [0.3, 0.2, 0.1]), ([0.2], [])])
def test_garch_filter_backends_agree(rng, a, b):
    e2 = rng.standard_normal(300) ** 2
    outs = []
    for name in ("numpy", "numba"):
        out = np.empty(300)
        kernels.get_backend(name).garch_filter(e2, 0.05, np.array(a), np.array(b, dtype=float), 1.7, out)
        outs.append(out)
    assert_allclose(outs[0], outs[1], rtol=1e-12)
    assert outs[0][0] == 1.7


def test_projected_gd_backends_agree(rng):
    A = rng.standard_normal((100, 3))
    y = A @ np.array([1.0, -0.5, 0.3]) + 0.1 * rng.standard_normal(100)
    G, h = A.T @ A, A.T @ y
    steps = np.full(3, 0.5 / np.linalg.eigvalsh(G)[-1])
    res = [
        kernels.get_backend(n).projected_gd(G, h, float(y @ y), np.zeros(3), 0.1, steps, 500)
        for n in ("numpy", "numba")
    ]
    assert_allclose(res[0][0], res[1][0], rtol=1e-10)
    assert_allclose(res[0][1], res[1][1], rtol=1e-10)
    assert np.all(res[0][0] >= 0)


def test_env_flag_selects_numpy(monkeypatch):
    import importlib

    from dybm_vol import _accel

    monkeypatch.setenv(_accel.ENV_FLAG, "1")
    assert _accel.numba_disabled_by_env()
    try:
        importlib.reload(_accel)
        mod = importlib.reload(kernels)
        assert mod.BACKEND == "numpy"
        assert mod.mean_pass is kernels.get_backend("numpy").mean_pass
    finally:
        monkeypatch.delenv(_accel.ENV_FLAG)
        importlib.reload(_accel)
        importlib.reload(kernels)
