import math
import random

import numpy as np
import pytest

import ppscert as pc
import ppscert.eigen


def test_symmetric_ones_matrix():
    est = pc.approx_eigenvec(np.ones((2, 2)), 1e-10)
    assert np.allclose(est.vector, [1.0, 1.0], atol=1e-9)
    assert est.eigenvalue_estimate == pytest.approx(2.0, abs=1e-9)
    assert est.converged


def test_period_two_permutation_needs_shift():
    # plain power iteration on [[0,1],[1,0]] oscillates; the +I shift
    # makes the dominant eigenvalue unique
    est = pc.approx_eigenvec(np.array([[0.0, 1.0], [1.0, 0.0]]), 1e-10)
    assert np.allclose(est.vector, [1.0, 1.0], atol=1e-8)
    assert est.eigenvalue_estimate == pytest.approx(1.0, abs=1e-8)


def test_fex_jacobian_eigenvector(fex):
    # analytic fixpoint ((27 - sqrt(229))/50, (22 - sqrt(229))/50)
    s = math.sqrt(229)
    lfp = np.array([(27 - s) / 50, (22 - s) / 50])
    est = pc.approx_eigenvec(pc.jacobian_at(fex, lfp), 1e-9)
    assert abs(est.vector[0] - 1.0) <= 1e-3
    assert abs(est.vector[1] - 0.557) <= 1e-3
    assert abs(est.eigenvalue_estimate - 0.557) <= 1e-3


def test_zero_matrix_dimension_zero():
    with pytest.raises(pc.ZeroMatrix):
        pc.approx_eigenvec(np.zeros((0, 0)), 1e-6)


def test_one_by_one_zero_matrix_works():
    est = pc.approx_eigenvec(np.zeros((1, 1)), 1e-9)
    assert est.vector[0] == 1.0
    assert est.eigenvalue_estimate == pytest.approx(0.0, abs=1e-12)
    assert est.residual == pytest.approx(0.0, abs=1e-12)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        pc.approx_eigenvec(np.ones((2, 3)), 1e-6)
    with pytest.raises(ValueError):
        pc.approx_eigenvec(np.array([[1.0, -0.5], [0.5, 1.0]]), 1e-6)
    with pytest.raises(ValueError):
        pc.approx_eigenvec(np.ones((2, 2)), 0.0)
    with pytest.raises(ValueError):
        pc.approx_eigenvec(np.ones((2, 2)), 1e-6, init=np.array([1.0, 0.0]))


def _random_irreducible(rng, n):
    M = np.zeros((n, n))
    for i in range(n):
        M[i, (i + 1) % n] = rng.uniform(0.1, 1.0)  # cycle keeps it irreducible
        M[i, rng.randrange(n)] += rng.uniform(0.0, 1.0)
    return M


def test_residual_positivity_normalization():
    rng = random.Random(21)
    tol = 1e-8
    for _ in range(40):
        M = _random_irreducible(rng, rng.randint(1, 8))
        est = pc.approx_eigenvec(M, tol)
        norm = np.max(np.abs(M).sum(axis=1))
        assert est.residual <= 10 * tol * max(norm, 1.0)
        assert np.all(est.vector > 0)
        assert est.vector.max() == 1.0


def test_shift_invariance_of_direction():
    rng = random.Random(22)
    tol = 1e-9
    for _ in range(10):
        M = _random_irreducible(rng, rng.randint(2, 6))
        base = pc.approx_eigenvec(M, tol)
        for c in (0.5, 1.0, 2.0):
            shifted = pc.approx_eigenvec(M + c * np.eye(M.shape[0]), tol)
            assert np.max(np.abs(shifted.vector - base.vector)) <= 10 * tol
            assert shifted.eigenvalue_estimate == pytest.approx(
                base.eigenvalue_estimate + c, abs=1e-6
            )


def test_warm_start_accepted():
    M = np.array([[0.2, 0.7], [0.4, 0.1]])
    first = pc.approx_eigenvec(M, 1e-10)
    second = pc.approx_eigenvec(M, 1e-10, init=first.vector)
    assert second.iterations <= first.iterations
    assert np.allclose(first.vector, second.vector, atol=1e-9)


def test_iteration_cap_flags_unconverged(monkeypatch):
    monkeypatch.setattr(ppscert.eigen, "ITERATION_CAP", 3)
    # nearly equal eigenvalues make the iteration slow
    est = pc.approx_eigenvec(np.array([[1.0, 1e-3], [2e-3, 1.0]]), 1e-15)
    assert not est.converged
    assert est.iterations == 3
    assert np.all(est.vector > 0)  # still a usable guess direction


def test_reducible_matrix_tolerated():
    # upper-triangular: the estimate may develop zero entries, which the
    # caller tolerates; no exception and no negative entries
    M = np.array([[0.1, 0.0], [0.5, 0.6]])
    est = pc.approx_eigenvec(M, 1e-12)
    assert np.all(est.vector >= 0)
    assert est.vector.max() == 1.0
    assert est.eigenvalue_estimate == pytest.approx(0.6, abs=1e-6)
