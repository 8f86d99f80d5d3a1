import math
import random

import numpy as np
import pytest

import ppscert as pc
from conftest import random_system


def scalar_gs_oracle(sys, l):
    # per-variable recomputation in declaration order, plain python floats
    x = [float(v) for v in l]
    for i, poly in enumerate(sys.equations):
        acc = 0.0
        for mono in poly:
            term = float(mono.coefficient)
            for var, exp in mono.powers:
                term *= x[var] ** exp
            acc += term
        x[i] = acc
    return np.array(x)


def test_kleene_fex_constants(fex):
    assert np.array_equal(pc.kleene_step(fex, np.zeros(2)), [0.1, 0.1])


def test_kleene_single_var():
    sys = pc.parse_pps("x = 0.25 x^2 + 0.125\n")
    assert pc.kleene_step(sys, np.zeros(1))[0] == 0.125


def test_kleene_fig1_constants():
    sys = pc.parse_pps("x = 0.5 + 0.5 x y^2\ny = 1/3 + 1/3 x + 1/3 y^2\n")
    step = pc.kleene_step(sys, np.zeros(2))
    assert np.array_equal(step, pc.evaluate(sys, np.zeros(2)))
    assert np.allclose(step, [0.5, 1 / 3])


def test_gauss_seidel_uses_updated_components(fex):
    out = pc.gauss_seidel_step(fex, np.zeros(2))
    # x first: 0.1; then y sees the new x but the old y
    assert out[0] == 0.1
    assert out[1] == 0.2 * 0.1 ** 2 + 0.8 * 0.1 * 0.0 + 0.1
    assert np.array_equal(out, scalar_gs_oracle(fex, np.zeros(2)))


def test_gauss_seidel_fixpoint_is_stationary():
    sys = pc.parse_pps("x = 0.5 x + 0.5\n")
    assert pc.gauss_seidel_step(sys, np.ones(1))[0] == 1.0


def test_gauss_seidel_single_var_equals_kleene():
    sys = pc.parse_pps("x = 0.25 x^2 + 0.125\n")
    assert pc.gauss_seidel_step(sys, np.zeros(1)) == pc.kleene_step(sys, np.zeros(1))


def test_improve_until_converges_to_quadratic_root():
    # x = x^2/4 + 1/8 has roots (4 +- sqrt(14)) / 2; the fixpoint iteration
    # from 0 approaches the smaller one
    root = (4 - math.sqrt(14)) / 2
    sys = pc.parse_pps("x = 0.25 x^2 + 0.125\n")
    state = pc.improve_until(sys, pc.IterState(np.zeros(1)), 1e-6, 10_000)
    assert state.last_delta <= 1e-6
    assert state.current[0] == pytest.approx(root, abs=1e-5)
    assert state.current[0] <= root + 1e-12


def test_improve_until_budget_exhausted_on_drift():
    sys = pc.parse_pps("x = 1 x + 1\n")
    with pytest.raises(pc.BudgetExhausted) as info:
        pc.improve_until(sys, pc.IterState(np.zeros(1)), 1e-3, 50_000)
    assert info.value.state.current[0] == 50_000
    assert not info.value.contracting


def test_improve_until_divergence_threshold():
    sys = pc.parse_pps("x = 2 x + 1\n")
    with pytest.raises(pc.Infeasible):
        pc.improve_until(sys, pc.IterState(np.zeros(1)), 1e-3, 10_000)


def test_improve_until_immediate_at_fixpoint():
    sys = pc.parse_pps("x = 0.5 x + 0.5\n")
    state = pc.improve_until(sys, pc.IterState(np.ones(1)), 1e-9, 1000)
    assert state.current[0] == 1.0
    assert state.last_delta == 0.0


def test_improve_until_rejects_bad_tol(fex):
    with pytest.raises(ValueError):
        pc.improve_until(fex, pc.IterState(np.zeros(2)), 0.0, 10)
    with pytest.raises(ValueError):
        pc.improve_until(fex, pc.IterState(np.zeros(2)), 1e-3, 10, step="jacobi")


def test_monotone_convergence_and_dominance():
    rng = random.Random(11)
    for _ in range(50):
        sys = random_system(rng)
        l = np.zeros(sys.n)
        for _ in range(rng.randint(1, 20)):
            nxt = pc.kleene_step(sys, l)
            assert np.all(nxt >= l)  # monotone from below
            gs = pc.gauss_seidel_step(sys, l)
            assert np.all(gs >= nxt)  # per-step Gauss-Seidel dominance
            assert np.all(gs <= scalar_gs_oracle(sys, l) + 1e-15)
            l = nxt


def test_iterates_stay_below_certificates():
    rng = random.Random(12)
    for _ in range(10):
        sys = random_system(rng)
        cert = pc.solve(sys)
        upper = np.array([float(u) for u in cert.upper])
        l = np.zeros(sys.n)
        for _ in range(200):
            l = pc.gauss_seidel_step(sys, l)
            assert np.all(l <= upper + 1e-12)


def test_prefixpoint_preserved_within_rounding():
    rng = random.Random(13)
    for _ in range(20):
        sys = random_system(rng)
        state = pc.improve_until(sys, pc.IterState(np.zeros(sys.n)), 1e-8, 100_000)
        after = pc.evaluate(sys, state.current)
        assert np.all(state.current <= after + 1e-15)
