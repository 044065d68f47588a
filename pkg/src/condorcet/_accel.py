"""Numba switch.

Kernels are compiled with numba when it is importable, unless the environment
variable ``CONDORCET_DISABLE_NUMBA`` is set to a truthy value, in which case
the pure-numpy implementations are used everywhere.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("CONDORCET_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    if not _numba_requested():
        raise ImportError
    from numba import njit as _njit
    HAS_NUMBA = True
except ImportError:
    _njit = None
    HAS_NUMBA = False


def njit(func):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    if HAS_NUMBA:
        return _njit(cache=True)(func)
    return func


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"
