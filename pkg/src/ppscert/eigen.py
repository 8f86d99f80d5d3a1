"""Perron-Frobenius eigenvector estimation by power iteration on M + I.

For an irreducible non-negative matrix the +I shift makes the dominant
eigenvalue unique (period 1), so the iteration converges from any strictly
positive start; the eigenvectors of M and M + I coincide while eigenvalues
shift by one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import ZeroMatrix

ITERATION_CAP = 100_000


@dataclass
class EigenEstimate:
    vector: np.ndarray  # max-norm normalized, max entry exactly 1
    eigenvalue_estimate: float
    residual: float  # ||M v - lambda v||_inf
    converged: bool
    iterations: int


def approx_eigenvec(M, tol: float, init: np.ndarray | None = None) -> EigenEstimate:
    """Estimate the dominant eigenvector of a non-negative square matrix.

    `M` is a dense array or a (data, indices, indptr) CSR triple.  Stops
    when successive normalized iterates differ by at most `tol` in the max
    norm; if the cap is hit first the best estimate is returned with
    `converged` False (still a usable guess direction).  A warm start from
    a previous call can be passed as `init`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    data, indices, indptr = _as_csr(M)
    n = len(indptr) - 1
    if n == 0:
        raise ZeroMatrix("cannot estimate an eigenvector in dimension 0")
    if init is not None:
        v0 = np.asarray(init, dtype=np.float64)
        if v0.shape != (n,) or not np.all(v0 > 0):
            raise ValueError("init must be strictly positive with matching dimension")
    else:
        v0 = np.ones(n)
    backend = backends.get()
    v, iters, delta = backend.power_iteration(data, indices, indptr, v0, tol, ITERATION_CAP)
    v = v / np.max(v)  # make the max entry exactly 1
    mv = backend.csr_matvec(data, indices, indptr, v)
    lam = float(np.max(mv + v) - 1.0)
    residual = float(np.max(np.abs(mv - lam * v)))
    return EigenEstimate(v, lam, residual, bool(delta <= tol), int(iters))


def _as_csr(M):
    if isinstance(M, tuple) and len(M) == 3:
        return M
    dense = np.asarray(M, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise ValueError("expected a square matrix")
    if np.any(dense < 0):
        raise ValueError("matrix must be non-negative")
    n = dense.shape[0]
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    data = []
    for i in range(n):
        js = np.nonzero(dense[i])[0]
        indices.extend(int(j) for j in js)
        data.extend(float(dense[i, j]) for j in js)
        indptr[i + 1] = len(indices)
    return np.asarray(data), np.asarray(indices, dtype=np.int64), indptr
