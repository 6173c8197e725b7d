import numpy as np
import pytest

from quadtrack.saturation import (
    DecompositionCertificate,
    NotFound,
    check_assumption1,
    grow_subspace,
    representable,
    saturation_chain,
)
from quadtrack.subspace import column_space, orthonormalize
from quadtrack.system import example_net_system, lorenz_system, make_system, six_state_system

E = np.eye(6)


def test_in_source_gives_p0():
    sys = lorenz_system()
    src = column_space(sys.B)
    c = representable(sys, src, [0.0, 2.0, 2.0])
    assert isinstance(c, DecompositionCertificate) and c.p == 0 and c.residual < 1e-12
    assert np.allclose(c.xi0, [0, 2, 2])


def test_lorenz_vertical_direction():
    sys = lorenz_system()
    src = column_space(sys.B)
    c = representable(sys, src, [0.0, 0.0, 1.0], seed=3)
    assert isinstance(c, DecompositionCertificate) and c.p >= 1
    assert c.is_valid(sys, src)


def test_six_state_e4():
    sys = six_state_system()
    src = orthonormalize(E[:3])
    c = representable(sys, src, E[3], seed=0)
    assert isinstance(c, DecompositionCertificate) and c.p == 1
    assert c.is_valid(sys, src)
    # f(xi) must cancel e4: xi has opposite-signed first two components
    xi = c.xis[0]
    assert xi[0] * xi[1] == pytest.approx(-1.0, abs=1e-8)


def test_grow_without_nonlinearity():
    sys = make_system(np.zeros((3, 3)), np.eye(3)[:, :1])
    E0 = column_space(sys.B)
    E1, certs = grow_subspace(sys, E0)
    assert E1.dim == 1 and len(certs) == 1


@pytest.mark.parametrize("builder,dims", [(lorenz_system, [2, 3]), (six_state_system, [3, 6]),
                                          (example_net_system, [2, 3])])
def test_chains(builder, dims):
    sys = builder()
    chain = saturation_chain(sys, seed=0)
    assert [E.dim for E in chain.levels] == dims
    assert chain.saturated and chain.n_X == 1
    for l in range(1, len(chain.levels)):
        for plus, minus in chain.certificates[l].values():
            assert plus.is_valid(sys, chain.levels[l - 1])
            assert minus.is_valid(sys, chain.levels[l - 1])
            assert np.allclose(plus.gamma, -minus.gamma)


def test_onto_chain():
    sys = make_system(np.zeros((2, 2)), np.eye(2), np.ones((2, 2, 2)))
    chain = saturation_chain(sys)
    assert chain.n_X == 0 and chain.saturated and len(chain.levels) == 1


def test_unsaturated_chain():
    sys = make_system(np.zeros((3, 3)), np.eye(3)[:, :1])
    chain = saturation_chain(sys)
    assert not chain.saturated and chain.n_X is None


def test_determinism():
    a = saturation_chain(six_state_system(), seed=7).to_dict()
    b = saturation_chain(six_state_system(), seed=7).to_dict()
    assert a == b


@pytest.mark.parametrize("builder", [lorenz_system, example_net_system])
def test_assumption1_holds(builder):
    sys = builder()
    rep = check_assumption1(sys, seed=0)
    assert rep.success and not rep.failures
    for cert in rep.certificates:
        assert cert["residual"] < 1e-8


def test_assumption1_fails_for_six_state():
    sys = six_state_system()
    rep = check_assumption1(sys, directions=[E[3] + E[5]], attempts=64, seed=0)
    assert not rep.success
    (fail,) = rep.failures
    assert isinstance(fail, NotFound) and fail.best_residual > 0.1
    assert "not a proof" in fail.to_dict()["note"]


def test_bad_gamma():
    sys = lorenz_system()
    with pytest.raises(ValueError):
        representable(sys, column_space(sys.B), [1.0, 2.0])
