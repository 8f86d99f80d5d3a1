"""Pure numpy kernels, the fallback when numba is unavailable or disabled.

Evaluation is vectorized over monomials with a short loop over factor
slots; the Gauss-Seidel sweep is inherently sequential and runs on
precompiled per-equation tuples with scalar arithmetic.
"""

import numpy as np

NAME = "numpy"

STATUS_CONVERGED = 0
STATUS_STEPS = 1
STATUS_DIVERGED = 2


def _eval_plan(fv):
    plan = fv.scratch.get("np_eval")
    if plan is None:
        counts = np.diff(fv.mono_ptr)
        max_slots = int(counts.max()) if len(counts) else 0
        eq_of_mono = np.repeat(np.arange(fv.n), np.diff(fv.eq_ptr))
        slots = []
        for s in range(max_slots):
            mask = np.nonzero(counts > s)[0]
            idx = fv.mono_ptr[mask] + s
            slots.append((mask, fv.fvar[idx], fv.fexp[idx].astype(np.float64)))
        plan = (eq_of_mono, slots)
        fv.scratch["np_eval"] = plan
    return plan


def eval_system(fv, x):
    eq_of_mono, slots = _eval_plan(fv)
    terms = fv.coef.copy()
    for mask, var, exp in slots:
        terms[mask] *= x[var] ** exp
    return np.bincount(eq_of_mono, weights=terms, minlength=fv.n)


def _py_equations(fv):
    eqs = fv.scratch.get("py_eqs")
    if eqs is None:
        eqs = []
        for i in range(fv.n):
            monos = []
            for m in range(fv.eq_ptr[i], fv.eq_ptr[i + 1]):
                factors = [
                    (int(fv.fvar[f]), int(fv.fexp[f]))
                    for f in range(fv.mono_ptr[m], fv.mono_ptr[m + 1])
                ]
                monos.append((float(fv.coef[m]), factors))
            eqs.append(monos)
        fv.scratch["py_eqs"] = eqs
    return eqs


def gs_sweep(fv, x):
    delta = 0.0
    for i, monos in enumerate(_py_equations(fv)):
        acc = 0.0
        for coef, factors in monos:
            t = coef
            for var, exp in factors:
                t *= x[var] ** exp
            acc += t
        d = abs(acc - x[i])
        if d > delta:
            delta = d
        x[i] = acc
    return delta


def iterate(fv, x, tol, max_steps, use_gs, div):
    steps = 0
    delta = np.inf
    while steps < max_steps:
        if use_gs:
            delta = gs_sweep(fv, x)
        else:
            new = eval_system(fv, x)
            delta = float(np.max(np.abs(new - x))) if fv.n else 0.0
            x[:] = new
        steps += 1
        if not np.all(np.isfinite(x)) or np.any(x > div):
            return steps, delta, STATUS_DIVERGED
        if delta <= tol:
            return steps, delta, STATUS_CONVERGED
    return steps, delta, STATUS_STEPS


def jacobian_values(fv, st, x):
    data = np.zeros(len(st.indices))
    for i in range(fv.n):
        for m in range(fv.eq_ptr[i], fv.eq_ptr[i + 1]):
            lo, hi = fv.mono_ptr[m], fv.mono_ptr[m + 1]
            for f in range(lo, hi):
                c = fv.coef[m] * fv.fexp[f]
                for g in range(lo, hi):
                    e = fv.fexp[g] - 1 if g == f else fv.fexp[g]
                    if e > 0:
                        c *= x[fv.fvar[g]] ** e
                data[st.contrib_entry[f]] += c
    return data


def csr_matvec(data, indices, indptr, v):
    n = indptr.shape[0] - 1
    row = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(row, weights=data * v[indices], minlength=n)


def power_iteration(data, indices, indptr, v0, tol, cap):
    n = indptr.shape[0] - 1
    row = np.repeat(np.arange(n), np.diff(indptr))
    v = v0 / np.max(v0)
    delta = np.inf
    iters = 0
    while iters < cap:
        w = np.bincount(row, weights=data * v[indices], minlength=n) + v
        w /= np.max(w)
        delta = float(np.max(np.abs(w - v)))
        v = w
        iters += 1
        if delta <= tol:
            break
    return v, iters, delta
