"""Numeric kernel backends.

The hot loops (fixpoint sweeps, Jacobian assembly, power iteration) exist
twice: a numba-jitted implementation and a pure numpy fallback.  Selection
order: the PPSCERT_BACKEND environment variable ("numba" or "numpy"),
falling back to numba when it imports and numpy otherwise.
"""

import os

_backend = None


def get():
    global _backend
    if _backend is None:
        _backend = _resolve(os.environ.get("PPSCERT_BACKEND", ""))
    return _backend


def name() -> str:
    return get().NAME


def _resolve(requested: str):
    requested = requested.strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise ValueError(f"unknown backend {requested!r}; use 'numba' or 'numpy'")
    if requested == "numpy":
        from . import numpy_impl

        return numpy_impl
    try:
        from . import numba_impl

        return numba_impl
    except ImportError:
        if requested == "numba":
            raise
        from . import numpy_impl

        return numpy_impl


def set_backend(requested: str):
    """Force a backend (used by tests and the backend benchmark)."""
    global _backend
    _backend = _resolve(requested)
    return _backend
