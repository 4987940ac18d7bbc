"""Optional numba acceleration.

Hot kernels are written twice: an explicit-loop version compiled with
``njit`` and a vectorised numpy version. Which one the public API uses is
decided once, at import time:

* ``AERIALNET_DISABLE_NUMBA=1`` forces the numpy path;
* otherwise numba is used when it can be imported.

Both paths are kept importable so tests and the benchmark can compare them.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("AERIALNET_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG in {"1", "true", "yes", "on"}
NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is enabled, identity otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


def pick(loop_impl, numpy_impl):
    return loop_impl if NUMBA_ENABLED else numpy_impl


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
