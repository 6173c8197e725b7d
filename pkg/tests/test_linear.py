import numpy as np
import pytest

from quadtrack import linear
from quadtrack.experiments import random_trig_signal
from quadtrack.signals import ClosedForm, TimeGrid

GRID = TimeGrid(1.0, 2000)


def const(c, grid=GRID):
    c = np.asarray(c, dtype=float)
    return ClosedForm(grid, lambda t: np.tile(c, (t.size, 1)), dim=c.size)


def test_forward_pure_integration():
    lin = linear.LinearTriple(np.zeros((2, 2)), np.eye(2))
    y = linear.apply_forward_map(lin, const([1.0, -2.0]), GRID)
    assert np.allclose(y.values, np.outer(GRID.nodes, [1.0, -2.0]), atol=1e-13)
    assert np.all(linear.apply_forward_map(lin, const([0.0, 0.0]), GRID).values == 0)


def test_forward_exponential():
    lin = linear.LinearTriple([[1.0]], [[1.0]])
    y = linear.apply_forward_map(lin, const([1.0]), GRID)
    assert np.allclose(y.values[:, 0], np.exp(GRID.nodes) - 1, atol=1e-8)


def test_adjoint_basics():
    lin = linear.LinearTriple(np.zeros((2, 2)), [[1.0], [2.0]])
    assert np.all(linear.apply_adjoint(lin, const([0.0, 0.0]), GRID).values == 0)
    q = linear.apply_adjoint(lin, const([1.0, 1.0]), GRID)
    assert np.allclose(q.values[:, 0], 3 * (1 - GRID.nodes), atol=1e-12)


def test_duality(rng):
    for _ in range(20):
        n, m, p = 3, 2, 2
        lin = linear.LinearTriple(rng.normal(size=(n, n)), rng.normal(size=(n, m)), rng.normal(size=(p, n)))
        u = random_trig_signal(rng, GRID, m)
        g = random_trig_signal(rng, GRID, p)
        assert linear.duality_residual(lin, u, g, GRID) <= 1e-7


def test_witness_trivial():
    lin = linear.LinearTriple(np.zeros((2, 2)), [[1.0], [0.0]])
    g = linear.kernel_witness(lin, [0.0, 1.0], GRID)
    assert np.allclose(g.nodes(), [0.0, 1.0])
    assert np.max(np.abs(linear.apply_adjoint(lin, g, GRID).values)) == 0


def test_witness_random_rank2(rng):
    A = rng.normal(size=(4, 4))
    B = rng.normal(size=(4, 2))
    lin = linear.LinearTriple(A, B)
    res = linear.onto_check(B)
    assert not res.onto and res.null_basis.shape == (2, 4)
    for eta in res.null_basis:
        g = linear.kernel_witness(lin, eta, GRID)
        assert linear.max_norm(linear.apply_adjoint(lin, g, GRID)) <= 1e-8
        assert linear.max_norm(linear.extended_weak_adjoint(lin, g, GRID)) <= 1e-8
        assert linear.witness_identity_residual(lin, eta, GRID) <= 1e-8


def test_no_witness_when_onto(rng):
    lin = linear.LinearTriple(rng.normal(size=(3, 3)), rng.normal(size=(3, 3)))
    assert linear.onto_check(lin.B).onto
    with pytest.raises(linear.NoWitness):
        linear.kernel_witness(lin, [1.0, 0.0, 0.0], GRID)
    with pytest.raises(linear.NoWitness):
        linear.kernel_witness(lin, [0.0, 0.0, 0.0], GRID)


def test_onto_check_cases():
    assert linear.onto_check(np.eye(3)).onto
    r = linear.onto_check(np.array([[1.0], [0.0]]))
    assert not r.onto and np.allclose(np.abs(r.null_basis), [[0.0, 1.0]])
    r = linear.onto_check(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]))
    assert np.allclose(np.abs(r.null_basis[0]), [0, 1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_weak_adjoint_zero():
    lin = linear.LinearTriple(np.eye(2), np.eye(2))
    assert np.all(linear.extended_weak_adjoint(lin, const([0.0, 0.0]), GRID).values == 0)


def test_weak_adjoint_matches_extended_triple(rng):
    lin = linear.LinearTriple(rng.normal(size=(3, 3)), rng.normal(size=(3, 2)))
    g = random_trig_signal(rng, GRID, 3)
    ext = linear.extended_operators(lin)
    oracle = linear.apply_adjoint(ext, g, GRID).values
    assert np.allclose(linear.extended_weak_adjoint(lin, g, GRID).values, oracle, atol=1e-9)


def test_weak_adjoint_of_witness_shape_off_kernel(rng):
    # with eta outside the kernel the image is (tau - s)^2 / 2 * B* eta
    lin = linear.LinearTriple(rng.normal(size=(3, 3)), rng.normal(size=(3, 3)))
    eta = rng.normal(size=3)
    g = linear.witness_shape(lin, eta, GRID)
    got = linear.extended_weak_adjoint(lin, g, GRID).values
    want = 0.5 * (1.0 - GRID.nodes)[:, None] ** 2 * (lin.B.T @ eta)[None, :]
    assert np.max(np.abs(got - want)) <= 1e-6


def test_bad_triple():
    with pytest.raises(ValueError):
        linear.LinearTriple(np.eye(2), np.ones((3, 1)))
