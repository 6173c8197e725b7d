import numpy as np
import pytest

from quadtrack.subspace import column_space, contains, distance, orthonormalize, span_union

E = np.eye(3)


def test_collinear():
    b = orthonormalize([[1, 0], [2, 0]], 1e-8)
    assert b.dim == 1 and np.allclose(np.abs(b.vectors[0]), [1, 0])


def test_empty():
    assert orthonormalize([], ambient_dim=3).dim == 0
    with pytest.raises(ValueError):
        orthonormalize([])


def test_two_of_three():
    b = orthonormalize([E[0] + E[1], E[0] - E[1]])
    assert b.dim == 2
    assert not contains(b, E[2])
    assert np.allclose(b.vectors @ b.vectors.T, np.eye(2))


def test_contains():
    b = orthonormalize([[1, 0]])
    assert contains(b, [0, 0])
    assert not contains(b, [0, 1])
    diag = orthonormalize([np.array([1, 1]) / np.sqrt(2)])
    assert contains(diag, [3, 3])
    assert distance(diag, [1, -1]) == pytest.approx(np.sqrt(2))


def test_span_union():
    e1 = orthonormalize([[1, 0]])
    e2 = orthonormalize([[0, 1]])
    zero = orthonormalize([], ambient_dim=2)
    assert span_union(e1, zero).dim == 1
    assert span_union(e1, e2).dim == 2
    assert span_union(e1, orthonormalize([[1, 1]])).dim == 2


def test_complement_and_column_space():
    b = column_space(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]))
    assert b.dim == 2
    c = b.complement()
    assert c.dim == 1
    assert np.allclose(np.abs(c.vectors[0]), [0, 1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_idempotent(rng):
    V = rng.normal(size=(4, 6))
    b = orthonormalize(V)
    again = orthonormalize(b.vectors)
    assert again.dim == b.dim == 4
    for v in V:
        assert contains(b, v)
