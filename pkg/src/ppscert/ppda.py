"""Probabilistic pushdown automata and their quantitative certificate systems.

A pPDA has finite states, a finite stack alphabet, and probabilistic rules
q Z -> p r alpha with |alpha| <= 2.  Return probabilities [q Z r] (reach
state r with the stack emptied, starting from q with Z on the stack) are
the least fixpoint of a quadratic positive polynomial system; a rational
inductive upper bound on that system is a basic certificate from which
reachability, output-distribution and expected-reward bounds follow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ArityViolation, ParseError, SlackNegative
from .exact import Certificate
from .ovi import OviParams, solve
from .pps import Monomial, PolySystem

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


Transition = tuple[Fraction, str, tuple[str, ...]]


@dataclass(frozen=True)
class Ppda:
    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: dict  # (q, Z) -> tuple of (prob, target state, pushed word)

    def __post_init__(self):
        state_set = set(self.states)
        alpha_set = set(self.alphabet)
        if len(state_set) != len(self.states) or len(alpha_set) != len(self.alphabet):
            raise ValueError("duplicate state or stack symbol")
        canon = {}
        for (q, Z), rules in self.transitions.items():
            if q not in state_set or Z not in alpha_set:
                raise ValueError(f"unknown state or symbol in ({q}, {Z})")
            total = Fraction(0)
            checked = []
            for p, r, alpha in rules:
                p = Fraction(p)
                if p <= 0:
                    raise ValueError("transition probabilities must be positive")
                if r not in state_set:
                    raise ValueError(f"unknown target state {r}")
                alpha = tuple(alpha)
                if len(alpha) > 2:
                    raise ValueError("push words are limited to length 2")
                for sym in alpha:
                    if sym not in alpha_set:
                        raise ValueError(f"unknown stack symbol {sym}")
                total += p
                checked.append((p, r, alpha))
            if total > 1:
                raise ValueError(f"probabilities at ({q}, {Z}) sum to {total} > 1")
            order = {s: i for i, s in enumerate(self.states)}
            checked.sort(key=lambda t: (order[t[1]], t[2], t[0]))
            canon[(q, Z)] = tuple(checked)
        object.__setattr__(self, "transitions", canon)

    def __eq__(self, other):
        return (
            isinstance(other, Ppda)
            and self.states == other.states
            and self.alphabet == other.alphabet
            and self.transitions == other.transitions
        )

    def rules(self, q: str, Z: str) -> tuple[Transition, ...]:
        return self.transitions.get((q, Z), ())

    def is_fully_stochastic(self) -> bool:
        return all(
            sum((p for p, _, _ in rules), Fraction(0)) == 1
            for rules in self.transitions.values()
        )

    def require_fully_stochastic(self):
        for (q, Z), rules in self.transitions.items():
            total = sum((p for p, _, _ in rules), Fraction(0))
            if total != 1:
                raise ValueError(f"probabilities at ({q}, {Z}) sum to {total} != 1")


@dataclass(frozen=True)
class ReturnVarIndex:
    """Bijection between (q, Z, r) triples and PPS variable ids."""

    triples: tuple[tuple[str, str, str], ...]
    var_of: dict = field(default_factory=dict, compare=False)

    @staticmethod
    def for_ppda(automaton: Ppda) -> "ReturnVarIndex":
        triples = tuple(
            (q, Z, r)
            for q in automaton.states
            for Z in automaton.alphabet
            for r in automaton.states
        )
        index = ReturnVarIndex(triples)
        index.var_of.update({t: i for i, t in enumerate(triples)})
        return index

    def var_id(self, q: str, Z: str, r: str) -> int:
        return self.var_of[(q, Z, r)]

    def triple_of(self, var: int) -> tuple[str, str, str]:
        return self.triples[var]

    def names(self, prefix: str = "") -> list[str]:
        return [f"{prefix}{q}.{Z}.{r}" for q, Z, r in self.triples]


def return_pps(automaton: Ppda) -> tuple[PolySystem, ReturnVarIndex]:
    """The quadratic system whose least fixpoint is the return probabilities.

    One variable per triple (q, Z, r); a push rule q Z -> p s Y X
    contributes p * [s Y t] * [t X r] summed over intermediate states t, a
    swap rule contributes p * [s Y r], and a pop rule q Z -> p r eps
    contributes the constant p.  Unreached triples keep empty polynomials
    and are removed by cleaning.
    """
    index = ReturnVarIndex.for_ppda(automaton)
    states = automaton.states
    equations = [[] for _ in index.triples]
    for (q, Z), rules in automaton.transitions.items():
        for p, s, alpha in rules:
            if len(alpha) == 0:
                equations[index.var_id(q, Z, s)].append(Monomial.make(p))
            elif len(alpha) == 1:
                (Y,) = alpha
                for r in states:
                    equations[index.var_id(q, Z, r)].append(
                        Monomial.make(p, {index.var_id(s, Y, r): 1})
                    )
            else:
                Y, X = alpha
                for r in states:
                    eq = equations[index.var_id(q, Z, r)]
                    for t in states:
                        a = index.var_id(s, Y, t)
                        b = index.var_id(t, X, r)
                        powers = {a: 2} if a == b else {a: 1, b: 1}
                        eq.append(Monomial.make(p, powers))
    system = PolySystem(index.names(), equations, max_degree=2)
    return system, index


def basic_certificate(automaton: Ppda, params: OviParams = OviParams(), **solve_kwargs) -> Certificate:
    """Certified rational upper bound on all return probabilities."""
    system, _ = return_pps(automaton)
    return solve(system, params, **solve_kwargs)


def bad_state_transform(automaton: Ppda, r_bad: str) -> Ppda:
    """Make r_bad absorbing-and-popping.

    Outgoing transitions of r_bad are removed and replaced by
    r_bad Z -> 1 r_bad eps for every stack symbol, so the return
    probability [q Z r_bad] of the result upper-bounds the probability of
    ever reaching r_bad from configuration q Z in the original automaton.
    """
    if r_bad not in automaton.states:
        raise ValueError(f"unknown state {r_bad}")
    transitions = {
        key: rules for key, rules in automaton.transitions.items() if key[0] != r_bad
    }
    for Z in automaton.alphabet:
        transitions[(r_bad, Z)] = ((Fraction(1), r_bad, ()),)
    return Ppda(automaton.states, automaton.alphabet, transitions)


def output_distribution_bounds(
    automaton: Ppda,
    init: tuple[str, str],
    cert: Certificate,
    assume_ast: bool = False,
) -> dict[str, tuple[Fraction, Fraction]]:
    """Per-state bounds on the sub-distribution of return states.

    Upper bounds come straight from the certificate.  Under an
    almost-sure-termination assumption the certified mass can exceed 1 by
    at most the total over-approximation, so u_r minus that slack is a
    valid lower bound; without the assumption lower bounds are 0.
    """
    q0, Z0 = init
    index = ReturnVarIndex.for_ppda(automaton)
    uppers = {r: cert.upper[index.var_id(q0, Z0, r)] for r in automaton.states}
    if not assume_ast:
        return {r: (Fraction(0), u) for r, u in uppers.items()}
    slack = sum(uppers.values(), Fraction(0)) - 1
    if slack < 0:
        raise SlackNegative(
            f"certified masses sum to {sum(uppers.values(), Fraction(0))} < 1; "
            "the automaton cannot be almost surely terminating"
        )
    return {r: (max(Fraction(0), u - slack), u) for r, u in uppers.items()}


@dataclass(frozen=True)
class RewardModel:
    """Non-negative reward per state; missing states earn zero."""

    reward: dict

    def __post_init__(self):
        clean = {}
        for state, value in self.reward.items():
            value = Fraction(value)
            if value < 0:
                raise ValueError("rewards must be non-negative")
            clean[state] = value
        object.__setattr__(self, "reward", clean)

    def of(self, state: str) -> Fraction:
        return self.reward.get(state, Fraction(0))

    @staticmethod
    def constant(automaton: Ppda, value) -> "RewardModel":
        return RewardModel({q: Fraction(value) for q in automaton.states})


def reward_pps(
    automaton: Ppda,
    rewards: RewardModel,
    cert: Certificate,
) -> tuple[PolySystem, ReturnVarIndex]:
    """Linear system bounding expected rewards along returning runs.

    Requires every rule to push 0 or 2 symbols (stack height changes by
    exactly one per step); see normalize_arities for the opt-in rewrite.
    The certificate's rational upper bounds stand in for the exact return
    probabilities, which over-approximates the expected reward, so solving
    the result with the standard pipeline yields sound upper bounds.
    """
    index = ReturnVarIndex.for_ppda(automaton)
    states = automaton.states
    u = cert.upper
    equations = [[] for _ in index.triples]
    for (q, Z), rules in automaton.transitions.items():
        for p, s, alpha in rules:
            if len(alpha) == 1:
                raise ArityViolation(
                    f"rule {q} {Z} -> {p} {s} {alpha[0]} changes the stack "
                    "height by 0; rewrite with normalize_arities first"
                )
            if len(alpha) == 0:
                gain = p * rewards.of(s)
                if gain > 0:
                    equations[index.var_id(q, Z, s)].append(Monomial.make(gain))
            else:
                Y, X = alpha
                for r in states:
                    eq = equations[index.var_id(q, Z, r)]
                    for t in states:
                        w = p * u[index.var_id(s, Y, t)] * u[index.var_id(t, X, r)]
                        if w == 0:
                            continue
                        gain = w * rewards.of(r)
                        if gain > 0:
                            eq.append(Monomial.make(gain))
                        eq.append(Monomial.make(w, {index.var_id(s, Y, t): 1}))
                        eq.append(Monomial.make(w, {index.var_id(t, X, r): 1}))
    system = PolySystem(index.names("E."), equations, max_degree=1)
    return system, index


def normalize_arities(automaton: Ppda) -> Ppda:
    """Rewrite every arity-1 rule q Z -> p s Y via a fresh padding symbol.

    q Z -> p s Y W plus t W -> 1 t eps for all states t preserves all
    return probabilities exactly; expected rewards are over-approximated
    (each simulated rule inserts one extra pop step), which keeps reward
    certificates sound as upper bounds.
    """
    if all(
        len(alpha) != 1
        for rules in automaton.transitions.values()
        for _, _, alpha in rules
    ):
        return automaton
    pad = "_pad"
    while pad in automaton.alphabet:
        pad += "_"
    transitions = {}
    for key, rules in automaton.transitions.items():
        new_rules = []
        for p, s, alpha in rules:
            if len(alpha) == 1:
                new_rules.append((p, s, (alpha[0], pad)))
            else:
                new_rules.append((p, s, alpha))
        transitions[key] = tuple(new_rules)
    alphabet = automaton.alphabet + (pad,)
    for t in automaton.states:
        transitions[(t, pad)] = ((Fraction(1), t, ()),)
    return Ppda(automaton.states, alphabet, transitions)


# ---------------------------------------------------------------------------
# text format


def parse_ppda(text: str) -> tuple[Ppda, tuple[str, str] | None]:
    """Parse the line-oriented pPDA format; returns (automaton, init)."""
    states: list[str] = []
    alphabet: list[str] = []
    init: tuple[str, str] | None = None
    transitions: dict = {}
    saw_header = False
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if not saw_header:
            if tokens != ["ppda"]:
                raise ParseError("expected 'ppda' header", ln)
            saw_header = True
            continue
        if tokens[0] == "states":
            states.extend(tokens[1:])
        elif tokens[0] == "stack":
            alphabet.extend(tokens[1:])
        elif tokens[0] == "init":
            init = _parse_init(tokens[1:], states, alphabet, ln)
        elif "->" in tokens:
            arrow = tokens.index("->")
            if arrow != 2:
                raise ParseError("transitions look like 'q Z -> p r alpha'", ln)
            q, Z = tokens[0], tokens[1]
            rest = tokens[3:]
            if len(rest) < 2:
                raise ParseError("missing probability or target state", ln)
            p = _parse_prob(rest[0], ln)
            r = rest[1]
            alpha_tokens = rest[2:]
            if alpha_tokens == ["eps"]:
                alpha: tuple[str, ...] = ()
            elif len(alpha_tokens) in (1, 2):
                alpha = tuple(alpha_tokens)
            else:
                raise ParseError("push word must be eps, one or two symbols", ln)
            transitions.setdefault((q, Z), []).append((p, r, alpha))
        else:
            raise ParseError(f"cannot parse line {raw!r}", ln)
    if not saw_header:
        raise ParseError("empty pPDA file")
    try:
        automaton = Ppda(tuple(states), tuple(alphabet), transitions)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return automaton, init


def _parse_init(tokens, states, alphabet, ln):
    if len(tokens) == 2:
        return tokens[0], tokens[1]
    if len(tokens) == 1:
        # concatenated form like 'qZ'; split on the unique state prefix
        matches = [
            (q, tokens[0][len(q):])
            for q in states
            if tokens[0].startswith(q) and tokens[0][len(q):] in alphabet
        ]
        if len(matches) == 1:
            return matches[0]
        raise ParseError("ambiguous init configuration; use 'init <state> <symbol>'", ln)
    raise ParseError("expected 'init <state> <symbol>'", ln)


def _parse_prob(token: str, ln: int) -> Fraction:
    try:
        if "//" in token:
            num, den = token.split("//")
            return Fraction(int(num), int(den))
        if "/" in token:
            num, den = token.split("/")
            return Fraction(int(num), int(den))
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"malformed probability {token!r}", ln) from None


def serialize_ppda(automaton: Ppda, init: tuple[str, str] | None = None) -> str:
    lines = ["ppda"]
    lines.append("states " + " ".join(automaton.states))
    lines.append("stack " + " ".join(automaton.alphabet))
    if init is not None:
        lines.append(f"init {init[0]} {init[1]}")
    for q in automaton.states:
        for Z in automaton.alphabet:
            for p, r, alpha in automaton.rules(q, Z):
                word = " ".join(alpha) if alpha else "eps"
                prob = str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"
                lines.append(f"{q} {Z} -> {prob} {r} {word}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# seeded simulation (statistical cross-checks in the test suite)


def _sim_tables(automaton: Ppda):
    states = {q: i for i, q in enumerate(automaton.states)}
    symbols = {Z: i for i, Z in enumerate(automaton.alphabet)}
    nq, nz = len(states), len(symbols)
    offsets = np.zeros(nq * nz + 1, dtype=np.int64)
    rows = []
    for q in automaton.states:
        for Z in automaton.alphabet:
            rules = automaton.rules(q, Z)
            offsets[states[q] * nz + symbols[Z] + 1] = len(rules)
            rows.extend(rules)
    offsets = np.cumsum(offsets)
    cum = np.zeros(len(rows))
    tgt = np.zeros(len(rows), dtype=np.int64)
    push = np.full((len(rows), 2), -1, dtype=np.int64)
    plen = np.zeros(len(rows), dtype=np.int64)
    pos = 0
    for q in automaton.states:
        for Z in automaton.alphabet:
            acc = 0.0
            for p, r, alpha in automaton.rules(q, Z):
                acc += float(p)
                cum[pos] = acc
                tgt[pos] = states[r]
                plen[pos] = len(alpha)
                for k, sym in enumerate(alpha):
                    push[pos, k] = symbols[sym]
                pos += 1
    return states, symbols, nz, offsets, cum, tgt, push, plen


def _sim_loop(offsets, cum, tgt, push, plen, nz, q0, z0, target, runs, step_cap, seed):
    np.random.seed(seed)
    hits = 0
    stack = np.empty(4096, dtype=np.int64)
    for _ in range(runs):
        q = q0
        stack[0] = z0
        top = 0
        for _ in range(step_cap):
            if q == target:
                hits += 1
                break
            if top < 0:
                break
            key = q * nz + stack[top]
            lo, hi = offsets[key], offsets[key + 1]
            if lo == hi:
                break  # stuck: no rules at all
            u = np.random.random()
            k = lo
            while k < hi - 1 and u > cum[k]:
                k += 1
            if u > cum[k]:
                break  # stuck: the draw fell into the missing mass
            q = tgt[k]
            top -= 1
            for j in range(plen[k] - 1, -1, -1):
                top += 1
                if top >= stack.shape[0]:
                    top = -2  # overflow: treat as non-terminating
                    break
                stack[top] = push[k, j]
            if top == -2:
                break
        else:
            if q == target:
                hits += 1
    return hits


if _HAVE_NUMBA:
    _sim_loop = _njit(cache=True)(_sim_loop)


def simulate_reach(
    automaton: Ppda,
    init: tuple[str, str],
    target: str,
    runs: int = 100_000,
    step_cap: int = 10_000,
    seed: int = 0,
) -> float:
    """Monte-Carlo estimate of the probability of ever visiting `target`.

    Runs are truncated at `step_cap` steps (truncation can only lower the
    estimate, which keeps upper-bound cross-checks sound).  Deterministic
    for a fixed seed.
    """
    states, symbols, nz, offsets, cum, tgt, push, plen = _sim_tables(automaton)
    hits = _sim_loop(
        offsets, cum, tgt, push, plen, nz,
        states[init[0]], symbols[init[1]], states[target],
        runs, step_cap, seed,
    )
    return hits / runs
