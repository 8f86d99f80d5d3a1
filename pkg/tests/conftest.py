import random
from fractions import Fraction

import numpy as np
import pytest

import ppscert as pc

PROGRAMS = {
    "golden": "benchmarks/programs/golden.ppl",
    "rw-0.499": "benchmarks/programs/rw-0.499.ppl",
    "rw-0.500": "benchmarks/programs/rw-0.500.ppl",
    "rw-0.501": "benchmarks/programs/rw-0.501.ppl",
    "and-or": "benchmarks/programs/and-or.ppl",
    "geom-offspring": "benchmarks/programs/geom-offspring.ppl",
    "gen-fun": "benchmarks/programs/gen-fun.ppl",
    "virus": "benchmarks/programs/virus.ppl",
    "sequential5": "benchmarks/programs/sequential5.ppl",
    "mod5": "benchmarks/programs/mod5.ppl",
    "escape10": "benchmarks/programs/escape10.ppl",
}

DEX_TEXT = """ppda
states q r
stack Z
init q Z
q Z -> 1/4 q Z Z
q Z -> 1/2 q eps
q Z -> 1/4 r eps
r Z -> 1 r eps
"""

FIG1_TEXT = "x = 0.5 + 0.5 x y^2\ny = 1/3 + 1/3 x + 1/3 x^2\n"
FEX_TEXT = "x = y + 0.1\ny = 0.2 x^2 + 0.8 x y + 0.1\n"


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile/load the jitted kernels once so timed tests measure the solver
    pc.solve(pc.parse_pps(FIG1_TEXT))
    pc.approx_eigenvec(np.array([[1.0, 1.0], [1.0, 1.0]]), 1e-6)


@pytest.fixture(scope="session")
def repo_root(pytestconfig):
    return pytestconfig.rootpath


@pytest.fixture(scope="session")
def dex():
    automaton, init = pc.parse_ppda(DEX_TEXT)
    return automaton, init


@pytest.fixture
def fex():
    return pc.parse_pps(FEX_TEXT)


@pytest.fixture
def fig1():
    return pc.parse_pps(FIG1_TEXT)


def program_path(repo_root, name):
    return repo_root / PROGRAMS[name]


def load_program(repo_root, name):
    text = program_path(repo_root, name).read_text(encoding="utf-8")
    return pc.parse_program(text)


# ---------------------------------------------------------------------------
# generators and oracles shared across test modules


def random_system(rng: random.Random, n=None, quadratic=True) -> pc.PolySystem:
    """Random feasible substochastic system: row coefficient mass < 1 plus a
    constant term, so the least fixpoint lies in (0, 1]^n."""
    n = n or rng.randint(1, 6)
    names = [f"v{i}" for i in range(n)]
    equations = []
    for i in range(n):
        poly = [pc.Monomial.make(Fraction(rng.randint(1, 4), 10))]
        budget = Fraction(rng.randint(1, 5), 10)
        terms = rng.randint(1, 3)
        for _ in range(terms):
            coeff = budget / terms
            if coeff == 0:
                continue
            if quadratic and rng.random() < 0.5:
                a, b = rng.randrange(n), rng.randrange(n)
                powers = {a: 2} if a == b else {a: 1, b: 1}
            else:
                powers = {rng.randrange(n): 1}
            poly.append(pc.Monomial.make(coeff, powers))
        equations.append(poly)
    return pc.PolySystem(names, equations)


def random_point(rng: random.Random, n, lo=0.0, hi=1.0) -> np.ndarray:
    return np.array([rng.uniform(lo, hi) for _ in range(n)])


def random_ppda(rng: random.Random) -> pc.Ppda:
    """Random sub-stochastic pPDA with pop bias so runs terminate quickly."""
    nq = rng.randint(1, 3)
    nz = rng.randint(1, 3)
    states = [f"s{i}" for i in range(nq)]
    alphabet = [f"A{i}" for i in range(nz)]
    transitions = {}
    for q in states:
        for Z in alphabet:
            if rng.random() < 0.15:
                continue  # no rules: stuck configuration, missing mass
            rules = []
            mass = Fraction(0)
            for _ in range(rng.randint(1, 3)):
                p = Fraction(rng.randint(1, 4), 8)
                if mass + p > 1:
                    break
                mass += p
                roll = rng.random()
                target = rng.choice(states)
                if roll < 0.55:
                    alpha = ()
                elif roll < 0.8:
                    alpha = (rng.choice(alphabet),)
                else:
                    alpha = (rng.choice(alphabet), rng.choice(alphabet))
                rules.append((p, target, alpha))
            if rules:
                transitions[(q, Z)] = rules
    return pc.Ppda(tuple(states), tuple(alphabet), transitions)


def random_ppda_ones_inductive(rng: random.Random) -> pc.Ppda:
    """Random pPDA for which the all-ones vector is inductive.

    At all-ones a push rule contributes p * |Q| to its equation (the sum
    over intermediate states), so rule masses are budgeted with weight |Q|
    for pushes and 1 otherwise; then f(1) <= 1 holds coordinatewise.
    """
    nq = rng.randint(1, 3)
    nz = rng.randint(1, 3)
    states = [f"s{i}" for i in range(nq)]
    alphabet = [f"A{i}" for i in range(nz)]
    denom = 8
    transitions = {}
    for q in states:
        for Z in alphabet:
            budget = denom
            rules = []
            for _ in range(rng.randint(0, 3)):
                roll = rng.random()
                target = rng.choice(states)
                if roll < 0.5:
                    alpha, weight = (), 1
                elif roll < 0.75:
                    alpha, weight = (rng.choice(alphabet),), 1
                else:
                    alpha, weight = (rng.choice(alphabet), rng.choice(alphabet)), nq
                if budget < weight:
                    continue
                mass = rng.randint(1, budget // weight)
                budget -= mass * weight
                rules.append((Fraction(mass, denom), target, alpha))
            if rules:
                transitions[(q, Z)] = rules
    return pc.Ppda(tuple(states), tuple(alphabet), transitions)


def lfp_oracle(sys: pc.PolySystem, iters=20000) -> np.ndarray:
    """Independent fixpoint approximation: plain Kleene iteration."""
    x = np.zeros(sys.n)
    for _ in range(iters):
        nxt = pc.kleene_step(sys, x)
        if np.max(np.abs(nxt - x)) == 0.0:
            return nxt
        x = nxt
    return x


def exact_linear_lfp(A, b):
    """Exact least fixpoint of x = A x + b (spectral radius < 1) by Gaussian
    elimination over the rationals; the test-side oracle for linear systems."""
    n = len(b)
    M = [[-A[i][j] if i != j else 1 - A[i][j] for j in range(n)] + [b[i]] for i in range(n)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[pivot] = M[pivot], M[col]
        inv = Fraction(1) / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                factor = M[r][col]
                M[r] = [a - factor * c for a, c in zip(M[r], M[col])]
    return [M[i][n] for i in range(n)]
