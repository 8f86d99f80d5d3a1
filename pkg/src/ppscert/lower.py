"""Monotone lower-bound improvement: Kleene and Gauss-Seidel iteration.

Starting from the zero vector, both step operators produce a monotone
sequence converging to the least fixpoint from below.  The Gauss-Seidel
sweep reuses already-updated components within one pass and dominates the
plain Kleene step, so it is the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import BudgetExhausted, Infeasible
from .pps import PolySystem

DIVERGENCE_THRESHOLD = 1e12
DEFAULT_BUDGET = 10_000_000

_CHECK_WINDOW = 4096


@dataclass
class IterState:
    """Current iterate plus counters; `current` stays <= f(current) up to
    float rounding for iterates produced from the zero vector."""

    current: np.ndarray
    rounds: int = 0
    last_delta: float = math.inf


def kleene_step(sys: PolySystem, l: np.ndarray) -> np.ndarray:
    """One simultaneous update l -> f(l)."""
    return backends.get().eval_system(sys.float_view(), np.asarray(l, dtype=np.float64))


def gauss_seidel_step(sys: PolySystem, l: np.ndarray) -> np.ndarray:
    """One in-order sweep using already-updated components for j < i."""
    x = np.array(l, dtype=np.float64, copy=True)
    backends.get().gs_sweep(sys.float_view(), x)
    return x


def improve_until(
    sys: PolySystem,
    state: IterState,
    tol: float,
    budget: int,
    step: str = "gauss-seidel",
) -> IterState:
    """Iterate until the last improvement is <= tol in the max norm.

    Raises Infeasible when an iterate exceeds the divergence threshold,
    and BudgetExhausted (carrying the final state, so the caller decides
    whether to give up) when `budget` steps were spent first.  The
    exception's `contracting` flag records whether the deltas were still
    shrinking, which separates slow convergence from unbounded drift.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    use_gs = _step_flag(step)
    fv = sys.float_view()
    backend = backends.get()
    x = np.asarray(state.current, dtype=np.float64).copy()
    spent = 0
    first_delta = None
    delta = state.last_delta
    while spent < budget:
        chunk = min(_CHECK_WINDOW, budget - spent)
        steps, delta, status = backend.iterate(
            fv, x, tol, chunk, use_gs, DIVERGENCE_THRESHOLD
        )
        spent += steps
        if first_delta is None:
            first_delta = delta
        if status == backend.STATUS_DIVERGED:
            raise Infeasible()
        if status == backend.STATUS_CONVERGED:
            return IterState(x, state.rounds + spent, delta)
    exc = BudgetExhausted(IterState(x, state.rounds + spent, delta))
    exc.contracting = first_delta is not None and delta < 0.5 * first_delta
    raise exc


def _step_flag(step: str) -> bool:
    if step == "gauss-seidel":
        return True
    if step == "kleene":
        return False
    raise ValueError(f"unknown update step {step!r}")
