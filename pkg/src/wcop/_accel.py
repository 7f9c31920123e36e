"""Backend selection for the hot kernels.

Set ``WCOP_DISABLE_NUMBA=1`` to force the pure-numpy path. When numba is not
importable the numpy path is used automatically.
"""
import os

_FLAG = "WCOP_DISABLE_NUMBA"


def _truthy(value):
    return value.strip().lower() not in ("", "0", "false", "no", "off")


try:
    import numba as _numba
except ImportError:  # pragma: no cover - depends on environment
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not _truthy(os.environ.get(_FLAG, ""))


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise an identity decorator.

    The returned function is always compiled when numba exists, regardless of
    the env flag, so benchmarks can compare both paths in one process.
    """
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
