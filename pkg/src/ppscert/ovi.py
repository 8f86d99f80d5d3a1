"""Optimistic value iteration for positive polynomial systems.

Per strongly connected component: improve a lower bound until consecutive
iterates are within the current tolerance, estimate the Perron-Frobenius
eigenvector of the Jacobian there, and optimistically guess upper bounds
l + d^k * eps * v for shrinking k-offsets until one is inductive in float
arithmetic.  Failed rounds decay the tolerance by c and widen the k range.

Whole systems are cleaned, decomposed into SCCs and solved bottom-up with
verified upper bounds substituted into dependent components; the assembled
float bound is then rationalized and checked in exact arithmetic, which is
the sole soundness authority.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import backends
from .eigen import EigenEstimate, approx_eigenvec
from .errors import (
    BudgetExhausted,
    ExactCheckFailed,
    GuessBudgetExhausted,
    Infeasible,
)
from .exact import (
    Certificate,
    RoundingGrain,
    first_violation,
    k_induction_check,
    to_rational,
)
from .lower import DEFAULT_BUDGET, IterState, improve_until
from .pps import PolySystem, clean, dep_graph, jacobian_csr, subsystem

STRATEGIES = ("eigenvector", "relative")
UPDATES = ("gauss-seidel", "kleene")


@dataclass(frozen=True)
class OviParams:
    epsilon: Fraction = Fraction(1, 1000)
    c: float = 0.1
    d: float = 0.5
    max_guess_rounds: int = 10
    strategy: str = "eigenvector"
    update: str = "gauss-seidel"
    iteration_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (0 < self.c < 1 and 0 < self.d < 1):
            raise ValueError("c and d must lie in (0, 1)")
        if self.max_guess_rounds < 1:
            raise ValueError("max_guess_rounds must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.update not in UPDATES:
            raise ValueError(f"update must be one of {UPDATES}")


@dataclass
class SccSolution:
    lower: np.ndarray
    upper: np.ndarray
    guesses_used: int
    strategy_used: str
    iterations: int = 0
    rho_estimate: float | None = None


def guess(l: np.ndarray, v: np.ndarray, epsilon: float, d: float, k: int) -> np.ndarray:
    """Optimistic candidate l + d^k * epsilon * v, in plain float semantics."""
    return l + (d ** k) * epsilon * v


def ovi_scc(
    sys: PolySystem,
    params: OviParams = OviParams(),
    initial_tol: float | None = None,
    trace: list | None = None,
) -> SccSolution:
    """Run optimistic value iteration on one strongly connected clean system.

    Returns a float pair (l, u) with l <= lfp, f(u) <= u in binary64 and
    ||u - l|| <= epsilon; exact verification of u happens downstream.
    Raises GuessBudgetExhausted after `max_guess_rounds` failed guess
    rounds, the typical symptom of a spectral radius of 1 at the fixpoint.
    A list passed as `trace` receives one record per guess round.
    """
    n = sys.n
    eps = float(params.epsilon)
    tol0 = float(initial_tol) if initial_tol is not None else eps
    backend = backends.get()
    fv = sys.float_view()
    state = IterState(np.zeros(n))
    rounds = 0
    guesses = 0
    v = np.ones(n)
    warm = None
    estimate: EigenEstimate | None = None
    while True:
        tol = (params.c ** rounds) * tol0  # exact float power, not cumulative
        budget_left = params.iteration_budget - state.rounds
        if budget_left <= 0:
            err = GuessBudgetExhausted(
                "iteration budget exhausted across guess rounds",
                rho_estimate=estimate.eigenvalue_estimate if estimate else None,
            )
            err.guesses = guesses
            err.iterations = state.rounds
            raise err
        try:
            state = improve_until(sys, state, tol, budget_left, step=params.update)
        except BudgetExhausted as exc:
            if not getattr(exc, "contracting", False):
                # non-shrinking improvement deltas: the iterates drift
                # upward without bound, the fixpoint is infinite
                err_inf = Infeasible(f"diverging lower bounds in {sys!r}")
                err_inf.guesses = guesses
                err_inf.iterations = exc.state.rounds
                raise err_inf from exc
            err = GuessBudgetExhausted(
                "iteration budget exhausted before the tolerance gate; "
                "the spectral radius at the fixpoint is likely close to 1",
                rho_estimate=estimate.eigenvalue_estimate if estimate else None,
            )
            err.guesses = guesses
            err.iterations = exc.state.rounds
            raise err from exc
        except Infeasible as exc:
            exc.args = (f"diverging lower bounds in {sys!r}",)
            raise
        l = state.current
        if params.strategy == "eigenvector":
            csr = jacobian_csr(sys, l)
            init = warm if warm is not None and np.all(warm > 0) else None
            estimate = approx_eigenvec(csr, tol, init=init)
            v = estimate.vector
            warm = v
        if trace is not None:
            trace.append({
                "round": rounds,
                "tol": tol,
                "iterations": state.rounds,
                "eigenvalue": estimate.eigenvalue_estimate if estimate else None,
            })
        for k in range(rounds + 1):
            if params.strategy == "eigenvector":
                u = guess(l, v, eps, params.d, k)
            else:
                u = (1.0 + (params.d ** k) * eps) * l
            guesses += 1
            fu = backend.eval_system(fv, u)
            if np.all(fu <= u):
                return SccSolution(
                    lower=l,
                    upper=u,
                    guesses_used=guesses,
                    strategy_used=params.strategy,
                    iterations=state.rounds,
                    rho_estimate=estimate.eigenvalue_estimate if estimate else None,
                )
        rounds += 1
        if rounds >= params.max_guess_rounds:
            err = GuessBudgetExhausted(
                f"no inductive guess after {rounds} rounds "
                f"({guesses} guesses); the least fixpoint likely admits no "
                "non-trivial inductive bound",
                rho_estimate=estimate.eigenvalue_estimate if estimate else None,
            )
            err.guesses = guesses
            err.iterations = state.rounds
            raise err


# ---------------------------------------------------------------------------
# whole-system orchestration


@dataclass
class SccStat:
    index: int
    size: int
    kind: str  # "ovi" or "trivial"
    strategy: str | None
    guesses: int
    iterations: int


@dataclass
class SolveStats:
    outcome: str = "Certified"
    n_vars: int = 0
    n_terms: int = 0
    zero_vars: int = 0
    scc_count: int = 0
    nontrivial_sccs: int = 0
    scc_max: int = 0
    sccs: list = field(default_factory=list)
    gap: float = 0.0
    k_used: int | None = None
    wall_ms: float = 0.0
    exact_ms: float = 0.0
    retries: int = 0
    failure_reason: str | None = None
    failure_coordinate: str | None = None
    failure_scc: int | None = None
    rho_estimate: float | None = None

    @property
    def total_guesses(self) -> int:
        return sum(s.guesses for s in self.sccs)

    @property
    def total_iterations(self) -> int:
        return sum(s.iterations for s in self.sccs)

    @property
    def exact_share(self) -> float:
        return self.exact_ms / self.wall_ms if self.wall_ms > 0 else 0.0


def solve(
    sys: PolySystem,
    params: OviParams = OviParams(),
    grain: RoundingGrain = RoundingGrain(),
    k_max: int = 10,
    jobs: int = 1,
) -> Certificate:
    """Certify a rational inductive upper bound on the least fixpoint.

    Cleans the system, walks its SCCs bottom-up (optimistic value
    iteration per non-trivial component, one exact evaluation per trivial
    one), assembles a full candidate and hands it to the exact checker.
    A certificate is only ever returned after the exact check passed.
    """
    cert, stats = solve_with_stats(sys, params, grain=grain, k_max=k_max, jobs=jobs)
    if cert is None:
        raise stats._exception
    return cert


def solve_with_stats(
    sys: PolySystem,
    params: OviParams = OviParams(),
    grain: RoundingGrain = RoundingGrain(),
    k_max: int = 10,
    jobs: int = 1,
):
    """Like solve() but never raises for solver outcomes; returns
    (certificate | None, SolveStats) with the failure recorded in the stats."""
    stats = SolveStats()
    t0 = time.perf_counter()
    try:
        cert = _solve_impl(sys, params, grain, k_max, max(1, jobs), stats)
        stats.outcome = "Certified"
        return cert, stats
    except GuessBudgetExhausted as exc:
        stats.outcome = "GuessBudgetExhausted"
        stats.failure_reason = str(exc)
        stats.failure_scc = exc.scc
        stats.rho_estimate = exc.rho_estimate
        stats._exception = exc
        return None, stats
    except Infeasible as exc:
        stats.outcome = "Infeasible"
        stats.failure_reason = str(exc)
        stats.failure_scc = exc.scc
        stats._exception = exc
        return None, stats
    except ExactCheckFailed as exc:
        stats.outcome = "ExactCheckFailed"
        stats.failure_reason = str(exc)
        stats.failure_coordinate = exc.coordinate
        stats._exception = exc
        return None, stats
    finally:
        stats.wall_ms = (time.perf_counter() - t0) * 1000.0


def _solve_impl(sys, params, grain, k_max, jobs, stats):
    stats.n_vars = sys.n
    stats.n_terms = sum(len(eq) for eq in sys.equations)
    cleaned, zero_set = clean(sys)
    stats.zero_vars = len(zero_set)
    keep = [i for i in range(sys.n) if i not in zero_set]
    orig_of = {ci: oi for ci, oi in enumerate(keep)}
    graph = dep_graph(cleaned)
    sccs = graph.scc_list
    stats.scc_count = len(sccs)
    trivial = [
        len(comp) == 1 and not graph.has_self_loop(comp[0]) for comp in sccs
    ]
    stats.nontrivial_sccs = sum(1 for t in trivial if not t)
    stats.scc_max = max((len(c) for c, t in zip(sccs, trivial) if not t), default=0)

    u_f = np.zeros(cleaned.n)
    l_f = np.zeros(cleaned.n)
    solutions: dict[int, SccSolution] = {}
    stat_of: dict[int, SccStat] = {}

    def run_scc(idx, initial_tol=None):
        comp = sccs[idx]
        if trivial[idx]:
            val = _float_equation(cleaned, comp[0], u_f)
            u_f[comp[0]] = val
            l_f[comp[0]] = val
            stat_of[idx] = SccStat(idx, 1, "trivial", None, 0, 0)
            return
        sub = subsystem(cleaned, comp, u_f)
        try:
            sol = ovi_scc(sub, params, initial_tol=initial_tol)
        except (GuessBudgetExhausted, Infeasible) as exc:
            exc.scc = idx
            stat_of[idx] = SccStat(
                idx, len(comp), "ovi", params.strategy,
                getattr(exc, "guesses", 0), getattr(exc, "iterations", 0),
            )
            stats.sccs = [stat_of[i] for i in sorted(stat_of)]
            names = [cleaned.var_names[i] for i in comp[:4]]
            exc.args = (f"SCC {idx} ({', '.join(names)}{'...' if len(comp) > 4 else ''}): {exc.args[0]}",)
            raise
        for pos, var in enumerate(comp):
            u_f[var] = sol.upper[pos]
            l_f[var] = sol.lower[pos]
        solutions[idx] = sol
        stat_of[idx] = SccStat(idx, len(comp), "ovi", sol.strategy_used, sol.guesses_used, sol.iterations)

    if jobs == 1:
        for idx in range(len(sccs)):
            run_scc(idx)
    else:
        _run_waves(sccs, graph, run_scc, jobs)
    stats.sccs = [stat_of[i] for i in range(len(sccs))]
    stats.gap = float(np.max(u_f - l_f)) if cleaned.n else 0.0

    # exact phase: rationalize, recompute trivial variables exactly, verify
    retried: set[int] = set()
    extra_headroom = Fraction(0)
    while True:
        t_exact = time.perf_counter()
        u_q = _assemble(sys, cleaned, orig_of, sccs, trivial, u_f, grain, extra_headroom)
        ok, k_used = k_induction_check(sys, u_q, k_max)
        stats.exact_ms += (time.perf_counter() - t_exact) * 1000.0
        if ok:
            break
        if extra_headroom == 0:
            # first rescue: round up with extra headroom, then re-verify
            extra_headroom = Fraction(1, 2 ** 20)
            continue
        bad = first_violation(sys, u_q)
        bad_name = sys.var_names[bad] if bad is not None else None
        idx = _owning_scc(bad, keep, graph) if bad is not None else None
        if idx is None or trivial[idx] or idx in retried:
            raise ExactCheckFailed(
                "exact verification failed"
                + (f" at coordinate {bad_name}" if bad_name else ""),
                coordinate=bad_name,
            )
        # solve the offending SCC again with a tighter tolerance gate
        retried.add(idx)
        stats.retries += 1
        run_scc(idx, initial_tol=float(params.epsilon) * params.c)
        stats.sccs = [stat_of[i] for i in range(len(sccs))]
        extra_headroom = Fraction(0)

    stats.k_used = k_used
    lower_witness = np.zeros(sys.n)
    for ci, oi in orig_of.items():
        lower_witness[oi] = l_f[ci]
    provenance = {}
    for i in range(sys.n):
        provenance[sys.var_names[i]] = "zero-cleaned"
    for idx, comp in enumerate(sccs):
        tag = "trivial" if trivial[idx] else f"ovi-scc {idx}"
        for ci in comp:
            provenance[cleaned.var_names[ci]] = tag
    return Certificate(
        system_fingerprint=sys.fingerprint(),
        var_names=sys.var_names,
        upper=u_q,
        epsilon=params.epsilon,
        k_used=k_used,
        lower_witness=lower_witness,
        per_var_provenance=provenance,
    )


def _run_waves(sccs, graph, run_scc, jobs):
    # wave k = SCCs whose dependencies all lie in earlier waves; waves run
    # in order, members of one wave concurrently (they touch disjoint state)
    wave = [0] * len(sccs)
    for idx, comp in enumerate(sccs):
        deps = {
            graph.scc_of[j]
            for i in comp
            for j in graph.succ[i]
            if graph.scc_of[j] != idx
        }
        wave[idx] = 1 + max((wave[d] for d in deps), default=-1)
    groups: dict[int, list[int]] = {}
    for idx, w in enumerate(wave):
        groups.setdefault(w, []).append(idx)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for w in sorted(groups):
            list(pool.map(run_scc, groups[w]))


def _float_equation(sys: PolySystem, i: int, values: np.ndarray) -> float:
    acc = 0.0
    for mono in sys.equations[i]:
        term = float(mono.coefficient)
        for var, exp in mono.powers:
            term *= values[var] ** exp
        acc += term
    return acc


def _assemble(sys, cleaned, orig_of, sccs, trivial, u_f, grain, extra_headroom):
    """Full rational candidate: exact zeros for cleaned-away variables,
    round-up rationalization for OVI components, and one exact evaluation
    per trivial component (in dependency order, so f_i(u) = u_i exactly)."""
    u_q = [Fraction(0)] * sys.n
    bump = RoundingGrain(grain.denominator_bound, grain.headroom + extra_headroom)
    for idx, comp in enumerate(sccs):
        if trivial[idx]:
            oi = orig_of[comp[0]]
            u_q[oi] = _exact_equation(sys, oi, u_q)
        else:
            floats = [u_f[ci] for ci in comp]
            rationals = to_rational(floats, bump)
            for ci, val in zip(comp, rationals):
                u_q[orig_of[ci]] = val
    return tuple(u_q)


def _exact_equation(sys, i, values):
    acc = Fraction(0)
    for mono in sys.equations[i]:
        term = mono.coefficient
        for var, exp in mono.powers:
            term *= values[var] ** exp
        acc += term
    return acc


def _owning_scc(bad_orig, keep, graph):
    try:
        ci = keep.index(bad_orig)
    except ValueError:
        return None
    return graph.scc_of[ci]
