import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperent.hilbert import SX, SZ, Observable, expectation, fidelity_pure, purity
from hyperent.state import (
    NoiseParams,
    bell_phi_plus,
    dephased_bell,
    ideal_he_state,
    marginal,
    marginal_purity_closed_form,
    noisy_he_state,
)

from oracles import dephased_bell_matrix

unit = st.floats(0.0, 1.0)
prob = st.floats(0.0, 0.99)


def test_ideal_he_is_product_of_bells():
    rho = ideal_he_state().dm()
    assert purity(rho) == pytest.approx(1.0)
    for dof in ("TB", "FB"):
        assert fidelity_pure(marginal(rho, dof), bell_phi_plus(dof)) == pytest.approx(1.0)


def test_noiseless_params_give_ideal_state():
    assert np.allclose(noisy_he_state(NoiseParams()).matrix, ideal_he_state().dm().matrix, atol=1e-15)


def test_fully_white_limit():
    rho = noisy_he_state(NoiseParams(p_white=0.999999))
    assert purity(rho) == pytest.approx(1 / 16, abs=1e-5)


@pytest.mark.parametrize("kwargs", [{"mu_tb": 1.1}, {"mu_fb": -0.1}, {"p_white": 1.0}, {"p_white": -0.01}])
def test_noise_validation(kwargs):
    with pytest.raises(ValueError):
        NoiseParams(**kwargs)


def test_dephased_matrix():
    assert np.allclose(dephased_bell(0.3).matrix, dephased_bell_matrix(0.3))


def test_dephased_invalid():
    with pytest.raises(ValueError):
        dephased_bell(1.5)


def test_marginal_unknown_dof():
    with pytest.raises(Exception):
        marginal(ideal_he_state().dm(), "XX")


@given(unit, unit, prob)
@settings(max_examples=60, deadline=None)
def test_noisy_state_invariants(mu_tb, mu_fb, p):
    rho = noisy_he_state(NoiseParams(mu_tb, mu_fb, p))
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(rho.matrix).min() >= -1e-12
    for dof, mu in (("TB", mu_tb), ("FB", mu_fb)):
        m = marginal(rho, dof)
        expected = (1 - p) * dephased_bell_matrix(mu) + p * np.eye(4) / 4
        assert np.allclose(m.matrix, expected, atol=1e-12)
        assert purity(m) == pytest.approx(marginal_purity_closed_form(mu, p), abs=1e-12)


@given(unit, unit, prob)
@settings(max_examples=40, deadline=None)
def test_stabilizer_expectations(mu_tb, mu_fb, p):
    rho = noisy_he_state(NoiseParams(mu_tb, mu_fb, p))
    eye4 = np.eye(4)
    xx, zz = np.kron(SX, SX), np.kron(SZ, SZ)
    vals = [expectation(rho, Observable(np.kron(xx, eye4), rho.layout)),
            expectation(rho, Observable(np.kron(zz, eye4), rho.layout)),
            expectation(rho, Observable(np.kron(eye4, xx), rho.layout)),
            expectation(rho, Observable(np.kron(eye4, zz), rho.layout))]
    want = [(1 - p) * mu_tb, 1 - p, (1 - p) * mu_fb, 1 - p]
    assert np.allclose(vals, want, atol=1e-12)


def test_reference_operating_point():
    rho = noisy_he_state(NoiseParams(0.93, 0.834, 0.032))
    assert fidelity_pure(marginal(rho, "TB"), bell_phi_plus("TB")) == pytest.approx(0.9421, abs=1e-4)
    assert fidelity_pure(marginal(rho, "FB"), bell_phi_plus("FB")) == pytest.approx(0.8957, abs=1e-4)


def test_classically_correlated_limit():
    assert purity(dephased_bell(0.0)) == pytest.approx(0.5)


def test_reference_point_marginal_purities():
    rho = noisy_he_state(NoiseParams(0.93, 0.834, 0.0))
    assert purity(marginal(rho, "TB")) == pytest.approx(0.932, abs=5e-4)
    assert purity(marginal(rho, "FB")) == pytest.approx(0.848, abs=5e-4)


def test_bell_correlators():
    rho = bell_phi_plus().dm()
    assert expectation(rho, Observable(np.kron(SX, SX), rho.layout)) == pytest.approx(1.0)
    assert expectation(rho, Observable(np.kron(SZ, SZ), rho.layout)) == pytest.approx(1.0)
    assert expectation(rho, Observable(np.kron(SX, SZ), rho.layout)) == pytest.approx(0.0)
    assert np.linalg.norm(bell_phi_plus().vector) == pytest.approx(1.0)


@pytest.mark.parametrize("mu_tb", np.linspace(0, 1, 5))
@pytest.mark.parametrize("mu_fb", np.linspace(0, 1, 5))
@pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.99])
def test_valid_over_parameter_grid(mu_tb, mu_fb, p):
    rho = noisy_he_state(NoiseParams(mu_tb, mu_fb, p))
    assert np.linalg.eigvalsh(rho.matrix).min() >= -1e-12
