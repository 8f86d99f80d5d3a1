"""Sparse positive polynomial systems x = f(x) and their basic analyses.

A system couples an ordered variable registry with one polynomial per
variable; every coefficient is a non-negative exact rational.  Floating
point views are derived on demand for the iterative solver, while the
certificate checker evaluates the same monomials in exact arithmetic.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch

Rational = Fraction


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(value)


@dataclass(frozen=True)
class Monomial:
    """One term coefficient * prod(x_j ** e_j) with coefficient > 0."""

    coefficient: Fraction
    powers: tuple[tuple[int, int], ...]  # sorted (variable id, exponent >= 1)

    @staticmethod
    def make(coefficient, powers: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        coeff = _as_fraction(coefficient)
        if coeff < 0:
            raise ValueError("monomial coefficient must be non-negative")
        items = dict(powers)
        for var, exp in items.items():
            if exp < 1:
                raise ValueError("exponents must be >= 1")
            if var < 0:
                raise ValueError("negative variable id")
        return Monomial(coeff, tuple(sorted(items.items())))

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.powers)

    def variables(self):
        return [v for v, _ in self.powers]


class PolySystem:
    """Immutable positive polynomial system over named variables.

    `equations[i]` is the list of monomials of f_i; variable ids in
    monomials index into `var_names`.  Duplicate monomials are merged and
    zero-coefficient terms dropped at construction, which makes equality
    and the canonical serialization well defined.
    """

    __slots__ = ("var_names", "equations", "max_degree", "_index", "_float_view", "_fingerprint")

    def __init__(self, var_names: Sequence[str], equations, max_degree: int | None = None):
        names = tuple(var_names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable name")
        if len(equations) != len(names):
            raise ValueError("need exactly one equation per variable")
        n = len(names)
        normalized = []
        for poly in equations:
            merged: dict[tuple[tuple[int, int], ...], Fraction] = {}
            for mono in poly:
                if not isinstance(mono, Monomial):
                    mono = Monomial.make(*mono)
                for var in mono.variables():
                    if var >= n:
                        raise ValueError("variable id out of range")
                if mono.coefficient == 0:
                    continue
                if max_degree is not None and mono.degree > max_degree:
                    raise ValueError(f"monomial degree {mono.degree} exceeds cap {max_degree}")
                merged[mono.powers] = merged.get(mono.powers, Fraction(0)) + mono.coefficient
            normalized.append(tuple(
                Monomial(c, p) for p, c in sorted(merged.items()) if c != 0
            ))
        object.__setattr__(self, "var_names", names)
        object.__setattr__(self, "equations", tuple(normalized))
        object.__setattr__(self, "max_degree", max_degree)
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(names)})
        object.__setattr__(self, "_float_view", None)
        object.__setattr__(self, "_fingerprint", None)

    def __setattr__(self, name, value):
        raise AttributeError("PolySystem is immutable")

    @property
    def n(self) -> int:
        return len(self.var_names)

    def var_id(self, name: str) -> int:
        return self._index[name]

    def __eq__(self, other):
        return (
            isinstance(other, PolySystem)
            and self.var_names == other.var_names
            and self.equations == other.equations
        )

    def __hash__(self):
        return hash((self.var_names, self.equations))

    def __repr__(self):
        return f"PolySystem({self.n} vars, {sum(len(e) for e in self.equations)} terms)"

    # -- canonical text form, shared by the serializer and the fingerprint --

    def canonical_text(self) -> str:
        lines = []
        for name, poly in zip(self.var_names, self.equations):
            terms = []
            for mono in poly:
                parts = [_format_rational(mono.coefficient)]
                for var, exp in mono.powers:
                    parts.append(self.var_names[var] if exp == 1 else f"{self.var_names[var]}^{exp}")
                terms.append(" ".join(parts))
            lines.append(f"{name} = {' + '.join(terms)}".rstrip())
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        if self._fingerprint is None:
            digest = hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()
            object.__setattr__(self, "_fingerprint", digest)
        return self._fingerprint

    def float_view(self) -> "FloatSystem":
        if self._float_view is None:
            object.__setattr__(self, "_float_view", FloatSystem(self))
        return self._float_view


def _format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# evaluation


def evaluate(sys: PolySystem, point):
    """Evaluate f at `point`, exact when the input is rational.

    Accepts a numpy float vector (returns one) or a sequence of Fractions
    (returns a tuple of Fractions computed without rounding).
    """
    if isinstance(point, np.ndarray):
        if point.shape != (sys.n,):
            raise DimensionMismatch(f"expected {sys.n} entries, got {point.shape}")
        from . import backends

        return backends.get().eval_system(sys.float_view(), np.asarray(point, dtype=np.float64))
    values = list(point)
    if len(values) != sys.n:
        raise DimensionMismatch(f"expected {sys.n} entries, got {len(values)}")
    return tuple(evaluate_equation(sys, i, values) for i in range(sys.n))


def evaluate_equation(sys: PolySystem, i: int, values) -> Fraction:
    """Exact value of f_i at a full rational assignment."""
    acc = Fraction(0)
    for mono in sys.equations[i]:
        term = mono.coefficient
        for var, exp in mono.powers:
            term *= values[var] ** exp
        acc += term
    return acc


def jacobian_at(sys: PolySystem, point):
    """Jacobi matrix entry (i, j) = d f_i / d x_j evaluated at `point`.

    Returns a dense numpy matrix for float input, a nested list of
    Fractions for rational input.
    """
    if isinstance(point, np.ndarray):
        if point.shape != (sys.n,):
            raise DimensionMismatch(f"expected {sys.n} entries, got {point.shape}")
        data, indices, indptr = jacobian_csr(sys, np.asarray(point, dtype=np.float64))
        dense = np.zeros((sys.n, sys.n))
        for i in range(sys.n):
            dense[i, indices[indptr[i]:indptr[i + 1]]] = data[indptr[i]:indptr[i + 1]]
        return dense
    values = list(point)
    if len(values) != sys.n:
        raise DimensionMismatch(f"expected {sys.n} entries, got {len(values)}")
    out = [[Fraction(0)] * sys.n for _ in range(sys.n)]
    for i, poly in enumerate(sys.equations):
        for mono in poly:
            for var, exp in mono.powers:
                term = mono.coefficient * exp
                for ovar, oexp in mono.powers:
                    e = oexp - 1 if ovar == var else oexp
                    if e:
                        term *= values[ovar] ** e
                out[i][var] += term
    return out


def jacobian_csr(sys: PolySystem, point: np.ndarray):
    """Sparse float Jacobian as a (data, indices, indptr) CSR triple."""
    from . import backends

    fv = sys.float_view()
    st = fv.jacobian_structure()
    data = backends.get().jacobian_values(fv, st, np.asarray(point, dtype=np.float64))
    return data, st.indices, st.indptr


# ---------------------------------------------------------------------------
# dependency structure


@dataclass(frozen=True)
class DepGraph:
    """Variable dependency graph with its SCC decomposition.

    `scc_list` is in reverse topological order: every edge (i, j), meaning
    f_i depends on x_j, targets an SCC with the same or a smaller index.
    """

    n: int
    succ: tuple[tuple[int, ...], ...]
    scc_list: tuple[tuple[int, ...], ...]
    scc_of: tuple[int, ...]

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(i, j) for i in range(self.n) for j in self.succ[i]}

    def has_self_loop(self, var: int) -> bool:
        return var in self.succ[var]


def dep_graph(sys: PolySystem) -> DepGraph:
    succ = []
    for poly in sys.equations:
        deps = set()
        for mono in poly:
            deps.update(mono.variables())
        succ.append(tuple(sorted(deps)))
    scc_list = _tarjan(sys.n, succ)
    scc_of = [0] * sys.n
    for idx, comp in enumerate(scc_list):
        for v in comp:
            scc_of[v] = idx
    return DepGraph(sys.n, tuple(succ), tuple(scc_list), tuple(scc_of))


def _tarjan(n: int, succ) -> list[tuple[int, ...]]:
    # Iterative Tarjan; components are emitted in reverse topological
    # order of the condensation, which is exactly the solve order.
    index = [-1] * n
    lowlink = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[tuple[int, ...]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(succ[v])):
                w = succ[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(tuple(sorted(comp)))
    return sccs


# ---------------------------------------------------------------------------
# cleaning


def clean(sys: PolySystem) -> tuple[PolySystem, set[int]]:
    """Remove variables whose least fixpoint component is zero.

    A variable is positive iff some monomial of its equation has all its
    variables already known positive (constants qualify immediately);
    the rest form the zero set.  Worklist propagation keeps this linear
    in the total number of factors.
    """
    n = sys.n
    positive = [False] * n
    # pending[i][k]: number of distinct not-yet-positive variables in monomial k
    watchers: dict[int, list[tuple[int, int]]] = {}
    pending: list[list[int]] = []
    queue = []
    for i, poly in enumerate(sys.equations):
        counts = []
        for k, mono in enumerate(poly):
            vs = set(mono.variables())
            counts.append(len(vs))
            if not vs and not positive[i]:
                positive[i] = True
                queue.append(i)
            for v in vs:
                watchers.setdefault(v, []).append((i, k))
        pending.append(counts)
    while queue:
        v = queue.pop()
        for (i, k) in watchers.get(v, ()):
            pending[i][k] -= 1
            if pending[i][k] == 0 and not positive[i]:
                positive[i] = True
                queue.append(i)
    zero_set = {i for i in range(n) if not positive[i]}
    if not zero_set:
        return sys, zero_set
    keep = [i for i in range(n) if positive[i]]
    remap = {old: new for new, old in enumerate(keep)}
    new_eqs = []
    for i in keep:
        poly = []
        for mono in sys.equations[i]:
            if any(v in zero_set for v in mono.variables()):
                continue
            poly.append(Monomial(mono.coefficient, tuple((remap[v], e) for v, e in mono.powers)))
        new_eqs.append(poly)
    cleaned = PolySystem([sys.var_names[i] for i in keep], new_eqs, max_degree=sys.max_degree)
    return cleaned, zero_set


# ---------------------------------------------------------------------------
# SCC subsystems


def subsystem(sys: PolySystem, scc: Sequence[int], values) -> PolySystem:
    """Restrict the system to `scc`, folding all other variables into the
    coefficients at their value in `values` (indexed over all of `sys`).

    The result is a self-contained system over the SCC's variables; with
    upper bounds substituted its least fixpoint dominates the SCC's slice
    of the original fixpoint.
    """
    inside = {v: k for k, v in enumerate(scc)}
    new_eqs = []
    for i in scc:
        poly = []
        for mono in sys.equations[i]:
            coeff = mono.coefficient
            powers = {}
            for var, exp in mono.powers:
                if var in inside:
                    powers[inside[var]] = exp
                else:
                    coeff *= _as_fraction(values[var]) ** exp
            if coeff != 0:
                poly.append(Monomial.make(coeff, powers))
        new_eqs.append(poly)
    return PolySystem([sys.var_names[i] for i in scc], new_eqs, max_degree=sys.max_degree)


# ---------------------------------------------------------------------------
# compiled float view


@dataclass
class JacStructure:
    indptr: np.ndarray
    indices: np.ndarray
    contrib_entry: np.ndarray  # aligned with the flattened factor arrays


class FloatSystem:
    """Flat array view of a PolySystem for the numeric kernels.

    Equation i owns monomials eq_ptr[i]:eq_ptr[i+1]; monomial m owns
    factors mono_ptr[m]:mono_ptr[m+1] described by (fvar, fexp).
    """

    def __init__(self, sys: PolySystem):
        self.n = sys.n
        eq_ptr = [0]
        coef = []
        mono_ptr = [0]
        fvar = []
        fexp = []
        for poly in sys.equations:
            for mono in poly:
                coef.append(float(mono.coefficient))
                for var, exp in mono.powers:
                    fvar.append(var)
                    fexp.append(exp)
                mono_ptr.append(len(fvar))
            eq_ptr.append(len(coef))
        self.eq_ptr = np.asarray(eq_ptr, dtype=np.int64)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.mono_ptr = np.asarray(mono_ptr, dtype=np.int64)
        self.fvar = np.asarray(fvar, dtype=np.int64)
        self.fexp = np.asarray(fexp, dtype=np.int64)
        self._jac: JacStructure | None = None
        self.scratch: dict = {}

    @property
    def n_terms(self) -> int:
        return len(self.coef)

    def jacobian_structure(self) -> JacStructure:
        if self._jac is not None:
            return self._jac
        entry_of: dict[tuple[int, int], int] = {}
        rows: list[list[int]] = [[] for _ in range(self.n)]
        for i in range(self.n):
            for m in range(self.eq_ptr[i], self.eq_ptr[i + 1]):
                for f in range(self.mono_ptr[m], self.mono_ptr[m + 1]):
                    j = int(self.fvar[f])
                    if (i, j) not in entry_of:
                        entry_of[(i, j)] = -1
                        rows[i].append(j)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indices = []
        for i in range(self.n):
            for j in sorted(rows[i]):
                entry_of[(i, j)] = len(indices)
                indices.append(j)
            indptr[i + 1] = len(indices)
        contrib = np.empty(len(self.fvar), dtype=np.int64)
        for i in range(self.n):
            for m in range(self.eq_ptr[i], self.eq_ptr[i + 1]):
                for f in range(self.mono_ptr[m], self.mono_ptr[m + 1]):
                    contrib[f] = entry_of[(i, int(self.fvar[f]))]
        self._jac = JacStructure(indptr, np.asarray(indices, dtype=np.int64), contrib)
        return self._jac
