"""Numba switch.

Kernels are compiled with numba when it is importable and the environment
variable ``HETPROP_DISABLE_NUMBA`` is unset (or ``0``). Otherwise every
``@njit`` below is the identity decorator and callers select the vectorized
numpy kernels instead.
"""
import os

_FLAG = os.environ.get("HETPROP_DISABLE_NUMBA", "0").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG in ("", "0", "false", "no")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is available, a no-op decorator otherwise.

    Compilation happens even when ``USE_NUMBA`` is false so that the two
    backends can be benchmarked side by side in one process.
    """
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def default_backend():
    return "numba" if USE_NUMBA else "numpy"


def resolve_backend(backend=None):
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
