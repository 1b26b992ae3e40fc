"""JIT switch for the numeric kernels.

Kernels are written once in the numba-compatible subset of Python.  When
numba is importable and ``SRGEODESICS_DISABLE_NUMBA`` is unset (or "0"),
they are compiled with ``numba.njit``; otherwise the same source runs as
plain Python/numpy.  The flag is read once, at import time.
"""
import os

_flag = os.environ.get("SRGEODESICS_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend():
    return "numba" if NUMBA_ENABLED else "python"
