"""Hot loops, dispatched to numba or to the numpy reference implementation.

Set ``DYBM_VOL_DISABLE_NUMBA=1`` before import to force the numpy path.
"""
from types import SimpleNamespace

from . import _kernels_python
from ._accel import HAS_NUMBA, USE_NUMBA

GAUSSIAN = _kernels_python.GAUSSIAN
GENERALIZED = _kernels_python.GENERALIZED

_NAMES = ("mean_pass", "var_features", "garch_filter", "projected_gd")


def get_backend(name):
    """Return a namespace holding the kernels of backend ``"numba"`` or ``"numpy"``."""
    if name == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba is not installed")
        from . import _kernels_numba as mod
    elif name == "numpy":
        mod = _kernels_python
    else:
        raise ValueError(f"unknown backend {name!r}")
    return SimpleNamespace(name=name, **{n: getattr(mod, n) for n in _NAMES})


BACKEND = "numba" if USE_NUMBA else "numpy"
_active = get_backend(BACKEND)

mean_pass = _active.mean_pass
var_features = _active.var_features
garch_filter = _active.garch_filter
projected_gd = _active.projected_gd
