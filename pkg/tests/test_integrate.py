import numpy as np
import pytest

from quadtrack import coupled as cp
from quadtrack.exceptions import BlowUp
from quadtrack.integrate import control_to_additive, resolve, resolve_coupled, resolve_driven, simulate_closed_loop
from quadtrack.signals import ClosedForm, SampledSignal, StageSignal, TimeGrid, l1_norm
from quadtrack.system import eval_f, example_net_system, lorenz_system, make_system

from conftest import random_system


def const(grid, c):
    c = np.asarray(c, dtype=float)
    return ClosedForm(grid, lambda t: np.tile(c, (t.size, 1)), dim=c.size)


def test_linear_ramp_exact():
    sys = make_system(np.zeros((2, 2)), np.eye(2))
    g = TimeGrid(1.0, 10)
    x = resolve(sys, [1.0, 2.0], None, const(g, [0.5, -1.0]), g)
    assert np.allclose(x.values, [1.0, 2.0] + np.outer(g.nodes, [0.5, -1.0]), atol=1e-14)


def test_blow_up():
    sys = make_system([[0.0]], [[1.0]], [[[-1.0]]])  # w' = w^2
    with pytest.raises(BlowUp) as err:
        resolve(sys, [1.0], None, None, TimeGrid(2.0, 4000))
    assert 0.99 < err.value.t_blow < 1.01


def test_resolve_matches_closed_loop(rng):
    sys = random_system(rng, scale=0.5)
    g = TimeGrid(1.0, 200)
    u = SampledSignal(g, rng.normal(size=(201, 2)))
    a = simulate_closed_loop(sys, [0.1, 0.2, 0.3], u, g)
    b = resolve(sys, [0.1, 0.2, 0.3], None, control_to_additive(sys, u, g), g)
    assert np.array_equal(a.values, b.values)


def test_zero_input_zero_state():
    sys = lorenz_system()
    g = TimeGrid(1.0, 100)
    x = simulate_closed_loop(sys, np.zeros(3), const(g, [0.0, 0.0]), g)
    assert np.all(x.values == 0)


def test_onto_exact_tracking():
    A = np.array([[0.0, 1.0], [-1.0, 0.2]])
    sys = make_system(A, np.eye(2), np.array([[[1, 0], [0, 0]], [[0, 0.5], [0.5, 0]]], dtype=float))
    g = TimeGrid(1.0, 2000)
    psi = ClosedForm(g, lambda t: np.stack([np.sin(2 * t), np.cos(t)], -1),
                     lambda t: np.stack([2 * np.cos(2 * t), -np.sin(t)], -1), dim=2)
    u = StageSignal(g, psi.derivative_stages() + psi.stages() @ A.T + eval_f(sys, psi.stages()))
    x = simulate_closed_loop(sys, psi.nodes()[0], u, g)
    assert np.max(np.abs(x.values - psi.nodes())) < 1e-6


def test_lorenz_free_run_converged():
    sys = lorenz_system()
    coarse = simulate_closed_loop(sys, [1, 1, 1], None, TimeGrid(1.0, 4000))
    fine = simulate_closed_loop(sys, [1, 1, 1], None, TimeGrid(1.0, 8000))
    assert np.all(np.isfinite(coarse.values))
    assert np.max(np.abs(coarse.values - fine.values[::2])) < 1e-6


def test_rk4_order():
    sys = lorenz_system()
    ref = simulate_closed_loop(sys, [1, 1, 1], None, TimeGrid(0.5, 8192)).final
    e1 = np.linalg.norm(simulate_closed_loop(sys, [1, 1, 1], None, TimeGrid(0.5, 128)).final - ref)
    e2 = np.linalg.norm(simulate_closed_loop(sys, [1, 1, 1], None, TimeGrid(0.5, 256)).final - ref)
    assert 12 <= e1 / e2 <= 20


def test_shift_identity(rng):
    sys = random_system(rng, scale=0.5)
    g = TimeGrid(1.0, 4000)
    zeta = ClosedForm(g, lambda t: np.stack([np.sin(5 * t), t**2, 1 - np.cos(3 * t)], -1),
                      lambda t: np.stack([5 * np.cos(5 * t), 2 * t, 3 * np.sin(3 * t)], -1), dim=3)
    gamma = const(g, [0.2, -0.1, 0.3])
    a = resolve(sys, [0.1, 0.0, -0.2], zeta, gamma, g)
    b = resolve(sys, [0.1, 0.0, -0.2], None, StageSignal(g, gamma.stages() + zeta.derivative_stages()), g)
    assert np.max(np.abs(a.values - (b.values - zeta.nodes()))) < 1e-6


def test_continuous_dependence(rng):
    sys = lorenz_system()
    g = TimeGrid(1.0, 2000)
    base_u = ClosedForm(g, lambda t: np.stack([np.sin(t), np.cos(t)], -1), dim=2)
    base = simulate_closed_loop(sys, [1, 1, 1], base_u, g)
    ratios = []
    for d in (1e-3, 1e-4, 1e-5):
        dw = d * rng.normal(size=3)
        dg = SampledSignal(g, d * rng.normal(size=(2001, 2)))
        pert = simulate_closed_loop(sys, np.array([1, 1, 1]) + dw, base_u + dg, g)
        num = np.max(np.linalg.norm(pert.values - base.values, axis=1))
        den = np.linalg.norm(dw) + l1_norm(SampledSignal(g, dg.nodes() @ sys.B.T))
        ratios.append(num / den)
    assert max(ratios) / min(ratios) < 10


def test_coupled_decoupled():
    drv = example_net_system()
    c = cp.make_coupled(drv, np.zeros((2, 2, 3)))
    g = TimeGrid(1.0, 200)
    u = const(g, [1.0, -1.0])
    x, z = resolve_coupled(c, [0.1, 0.2, 0.3], [1.0, 2.0], u, g)
    assert np.all(z.values == [1.0, 2.0])
    assert np.array_equal(x.values, simulate_closed_loop(drv, [0.1, 0.2, 0.3], u, g).values)


def test_coupled_exponential():
    # x held at 1 by the driver's equilibrium: A = 0, f = 0, u = 0
    drv = make_system(np.zeros((2, 2)), np.eye(2))
    c = cp.make_coupled(drv, cp.componentwise_product(2))
    g = TimeGrid(1.0, 1000)
    _, z = resolve_coupled(c, [1.0, 1.0], [2.0, -3.0], None, g)
    assert np.allclose(z.values, np.outer(np.exp(-g.nodes), [2.0, -3.0]), atol=1e-12)


def test_driven_matches_coupled():
    drv = example_net_system()
    c = cp.make_coupled(drv, cp.componentwise_product(3))
    g = TimeGrid(1.0, 1000)
    x, z = resolve_coupled(c, [0.1, 0.2, 0.3], [1.0, 1.0, 1.0], const(g, [0.5, 0.5]), g)
    # feeding the sampled x back in reproduces z up to interpolation error
    z2 = resolve_driven(c, [1.0, 1.0, 1.0], x, g)
    assert np.max(np.abs(z.values - z2.values)) < 1e-6
