"""Numba-jitted kernels. Same contracts as numpy_impl."""

import numpy as np
from numba import njit

NAME = "numba"

STATUS_CONVERGED = 0
STATUS_STEPS = 1
STATUS_DIVERGED = 2


@njit(cache=True, nogil=True)
def _eval(eq_ptr, coef, mono_ptr, fvar, fexp, x, out):
    for i in range(eq_ptr.shape[0] - 1):
        acc = 0.0
        for m in range(eq_ptr[i], eq_ptr[i + 1]):
            t = coef[m]
            for f in range(mono_ptr[m], mono_ptr[m + 1]):
                t *= x[fvar[f]] ** fexp[f]
            acc += t
        out[i] = acc


@njit(cache=True, nogil=True)
def _gs_sweep(eq_ptr, coef, mono_ptr, fvar, fexp, x):
    delta = 0.0
    for i in range(eq_ptr.shape[0] - 1):
        acc = 0.0
        for m in range(eq_ptr[i], eq_ptr[i + 1]):
            t = coef[m]
            for f in range(mono_ptr[m], mono_ptr[m + 1]):
                t *= x[fvar[f]] ** fexp[f]
            acc += t
        d = acc - x[i]
        if d < 0.0:
            d = -d
        if d > delta:
            delta = d
        x[i] = acc
    return delta


@njit(cache=True, nogil=True)
def _iterate(eq_ptr, coef, mono_ptr, fvar, fexp, x, tol, max_steps, use_gs, div):
    n = x.shape[0]
    buf = np.empty(n)
    steps = 0
    delta = np.inf
    while steps < max_steps:
        if use_gs:
            delta = _gs_sweep(eq_ptr, coef, mono_ptr, fvar, fexp, x)
        else:
            _eval(eq_ptr, coef, mono_ptr, fvar, fexp, x, buf)
            delta = 0.0
            for i in range(n):
                d = buf[i] - x[i]
                if d < 0.0:
                    d = -d
                if d > delta:
                    delta = d
                x[i] = buf[i]
        steps += 1
        bad = False
        for i in range(n):
            if not np.isfinite(x[i]) or x[i] > div:
                bad = True
                break
        if bad:
            return steps, delta, STATUS_DIVERGED
        if delta <= tol:
            return steps, delta, STATUS_CONVERGED
    return steps, delta, STATUS_STEPS


@njit(cache=True, nogil=True)
def _jac_values(eq_ptr, coef, mono_ptr, fvar, fexp, contrib, nnz, x):
    data = np.zeros(nnz)
    for i in range(eq_ptr.shape[0] - 1):
        for m in range(eq_ptr[i], eq_ptr[i + 1]):
            for f in range(mono_ptr[m], mono_ptr[m + 1]):
                c = coef[m] * fexp[f]
                for g in range(mono_ptr[m], mono_ptr[m + 1]):
                    e = fexp[g] - 1 if g == f else fexp[g]
                    if e > 0:
                        c *= x[fvar[g]] ** e
                data[contrib[f]] += c
    return data


@njit(cache=True, nogil=True)
def _csr_matvec(data, indices, indptr, v, out):
    for i in range(indptr.shape[0] - 1):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * v[indices[k]]
        out[i] = acc


@njit(cache=True, nogil=True)
def _power_iteration(data, indices, indptr, v0, tol, cap):
    n = v0.shape[0]
    v = v0 / np.max(v0)
    w = np.empty(n)
    delta = np.inf
    iters = 0
    while iters < cap:
        _csr_matvec(data, indices, indptr, v, w)
        nrm = 0.0
        for i in range(n):
            w[i] += v[i]  # power iteration on M + I
            if w[i] > nrm:
                nrm = w[i]
        delta = 0.0
        for i in range(n):
            w[i] /= nrm
            d = w[i] - v[i]
            if d < 0.0:
                d = -d
            if d > delta:
                delta = d
            v[i] = w[i]
        iters += 1
        if delta <= tol:
            break
    return v, iters, delta


def eval_system(fv, x):
    out = np.empty(fv.n)
    _eval(fv.eq_ptr, fv.coef, fv.mono_ptr, fv.fvar, fv.fexp, x, out)
    return out


def gs_sweep(fv, x):
    return _gs_sweep(fv.eq_ptr, fv.coef, fv.mono_ptr, fv.fvar, fv.fexp, x)


def iterate(fv, x, tol, max_steps, use_gs, div):
    return _iterate(
        fv.eq_ptr, fv.coef, fv.mono_ptr, fv.fvar, fv.fexp,
        x, tol, max_steps, use_gs, div,
    )


def jacobian_values(fv, st, x):
    return _jac_values(
        fv.eq_ptr, fv.coef, fv.mono_ptr, fv.fvar, fv.fexp,
        st.contrib_entry, len(st.indices), x,
    )


def csr_matvec(data, indices, indptr, v):
    out = np.empty(indptr.shape[0] - 1)
    _csr_matvec(data, indices, indptr, v, out)
    return out


def power_iteration(data, indices, indptr, v0, tol, cap):
    return _power_iteration(data, indices, indptr, v0, tol, cap)
