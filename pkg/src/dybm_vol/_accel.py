"""Backend selection for the hot loops.

Numba is used when it is importable, unless ``DYBM_VOL_DISABLE_NUMBA`` is set
to a truthy value, in which case the numpy/scipy reference kernels run.
"""
import os

ENV_FLAG = "DYBM_VOL_DISABLE_NUMBA"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is installed in CI
    HAS_NUMBA = False


def numba_disabled_by_env():
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAS_NUMBA and not numba_disabled_by_env()
