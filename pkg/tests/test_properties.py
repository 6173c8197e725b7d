import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from quadtrack.signals import SampledSignal, TimeGrid, relaxation_norm, square_wave, sup_norm
from quadtrack.subspace import contains, orthonormalize, span_union
from quadtrack.system import eval_f, make_system, polarize

unit = st.floats(-1, 1, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=unit)


@st.composite
def systems(draw):
    G = draw(arrays(np.float64, (3, 3, 3), elements=unit))
    A = draw(arrays(np.float64, (3, 3), elements=unit))
    return make_system(A, np.eye(3)[:, :1], G)


@given(systems(), vec3, vec3)
def test_polarization_identity(sys, a, b):
    r = eval_f(sys, a) + eval_f(sys, b) - 0.5 * (eval_f(sys, a + b) + eval_f(sys, a - b))
    assert np.linalg.norm(r) <= 1e-10 * (1 + a @ a + b @ b)
    assert np.array_equal(polarize(sys, a, b), polarize(sys, b, a))


@given(systems(), vec3, st.floats(-10, 10, allow_nan=False))
def test_homogeneity(sys, x, lam):
    assert np.allclose(eval_f(sys, lam * x), lam**2 * eval_f(sys, x), rtol=1e-12, atol=1e-12)


@given(st.lists(vec3, min_size=1, max_size=5))
def test_orthonormalize_contains_inputs(vs):
    b = orthonormalize(vs, ambient_dim=3)
    assert all(contains(b, v) for v in vs)
    assert orthonormalize(b.vectors, ambient_dim=3).dim == b.dim


@given(st.lists(vec3, max_size=3), st.lists(vec3, max_size=3))
def test_union_dimension(v1, v2):
    a, b = orthonormalize(v1, ambient_dim=3), orthonormalize(v2, ambient_dim=3)
    d = span_union(a, b).dim
    assert max(a.dim, b.dim) <= d <= a.dim + b.dim


@settings(max_examples=30)
@given(arrays(np.float64, (2, 3), elements=unit), st.integers(1, 8))
def test_wave_relaxation_closed_form(xis, n):
    m = 4
    w = square_wave(xis, n, TimeGrid(1.0, m * n * 2))
    expected = np.sqrt(m / 2) * np.max(np.linalg.norm(xis, axis=1)) / (m * n)
    assert abs(relaxation_norm(w) - expected) <= 1e-12 * max(expected, 1e-300) + 1e-15


@given(arrays(np.float64, (21, 2), elements=st.floats(-5, 5, allow_nan=False)))
def test_relaxation_bounded_by_sup(vals):
    s = SampledSignal(TimeGrid(1.0, 20), vals)
    assert relaxation_norm(s) <= sup_norm(s) + 1e-12
