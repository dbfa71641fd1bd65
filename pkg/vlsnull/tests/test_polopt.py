import logging

import pytest
import numpy as np

from vlsnull.atomprops import vls_per_intensity
from vlsnull.constants import GAMMA_RB87, W_PER_CM2
from vlsnull.polopt import (PolarizationState, Retarder, apply_retarder,
                            propagate, state_from_theta_phi,
                            circularity_after_cell, nulling_angle,
                            linearizing_qwp_angle, fictitious_field)
from vlsnull.utils.exceptions import NoRootError

logger = logging.getLogger(__name__)


@pytest.mark.parametrize('theta,expected', [(0, 0), (np.pi/4, 1),
                                            (-np.pi/4, -1),
                                            (0.035, np.sin(0.07))])
def test_state_circularity(theta, expected):
    state = state_from_theta_phi(theta, 0.3)
    assert np.isclose(state.circularity, expected, atol=1e-12)
    assert np.isclose(state.theta, theta, atol=1e-9)


def test_jones_circularity_convention():
    # C = 2 Im(Ex* Ey)
    state = PolarizationState.from_jones(1, 1j)
    assert np.isclose(state.circularity, 1)
    ex, ey = state.jones
    assert np.isclose(2 * np.imag(np.conj(ex) * ey), state.circularity)


def test_unnormalized_state_is_rejected():
    with pytest.raises(ValueError):
        PolarizationState(left=1, right=1)


def test_hwp_keeps_vertical_linear():
    out = apply_retarder(PolarizationState.linear(np.pi/2), Retarder.hwp(0))
    assert np.isclose(out.circularity, 0, atol=1e-12)


@pytest.mark.parametrize('theta', [0, 0.1, np.pi/8, np.pi/4, -0.3])
def test_qwp_on_horizontal(theta):
    out = apply_retarder(PolarizationState.linear(0), Retarder.qwp(theta))
    assert np.isclose(out.circularity, np.sin(2*theta), atol=1e-12)


def test_retarders_are_unitary():
    rng = np.random.default_rng(4)
    for _ in range(50):
        ret = Retarder(rng.uniform(-np.pi, np.pi), rng.uniform(0, np.pi))
        m = ret.matrix
        assert np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12)


def jones_chain(theta, phi_k, theta_k):
    return propagate(PolarizationState.linear(0),
                     [Retarder.qwp(theta),
                      Retarder.window(phi_k, theta_k)]).circularity


@pytest.mark.parametrize('theta,phi_k,theta_k', [(0.01, 0.05, 0.3),
                                                 (0.4, -0.1, 1.2),
                                                 (-0.2, 0.2, -0.7)])
def test_cell_circularity_matches_jones_chain(theta, phi_k, theta_k):
    assert np.isclose(circularity_after_cell(theta, phi_k, theta_k),
                      jones_chain(theta, phi_k, theta_k), atol=1e-10)


def test_cell_circularity_random_triples():
    rng = np.random.default_rng(11)
    n = 10000
    theta = rng.uniform(-np.pi/2, np.pi/2, n)
    phi_k = rng.uniform(-0.2, 0.2, n)
    theta_k = rng.uniform(0, np.pi, n)
    triples = list(zip(theta, phi_k, theta_k))
    expected = np.array([jones_chain(*args) for args in triples])
    found = np.array([circularity_after_cell(*args) for args in triples])
    assert np.max(np.abs(found - expected)) < 1e-9


def test_cell_circularity_without_birefringence():
    theta = np.linspace(-1, 1, 7)
    assert np.allclose(circularity_after_cell(theta, 0, 0.4),
                       np.sin(2*theta))


@pytest.mark.parametrize('phi_k,theta_k', [(0.05, 0.3), (-0.02, 1.0),
                                           (0.1, -0.5), (1e-3, 0.7)])
def test_nulling_angle_zeroes_circularity(phi_k, theta_k):
    theta_n = nulling_angle(phi_k, theta_k)
    assert abs(circularity_after_cell(theta_n, phi_k, theta_k)) < 1e-10
    assert abs(theta_n) < np.pi/4


def test_nulling_angle_first_order():
    phi_k, theta_k = 1e-4, 0.3
    expected = -(phi_k / 2) * np.sin(-2*theta_k)
    assert np.isclose(nulling_angle(phi_k, theta_k), expected, rtol=1e-3)


def test_nulling_angle_edges():
    assert nulling_angle(0, 0.3) == 0
    with pytest.raises(NoRootError):
        nulling_angle(np.pi/2, 0.3)


@pytest.mark.parametrize('theta,phi', [(0.3, 0.2), (-0.5, 1.1), (0.7, 0.),
                                       (0.0, 0.4)])
def test_linearizing_qwp_angle(theta, phi):
    state = state_from_theta_phi(theta, phi)
    angle = linearizing_qwp_angle(state)
    assert 0 <= angle <= np.pi/2
    out = apply_retarder(state, Retarder.qwp(angle))
    assert abs(out.circularity) < 1e-10


def test_fictitious_field(alpha_v):
    intensity = 8.39e3 * W_PER_CM2
    field = fictitious_field(intensity, 1.0, (0, 0, 1), alpha_v, -0.5, 1)
    # Frequency shift divided by the Larmor frequency per gauss
    expected = (abs(vls_per_intensity(alpha_v, 1)) * 8.39e3
                / (GAMMA_RB87 / (2 * np.pi)))
    assert np.allclose(field[:2], 0)
    assert np.isclose(abs(field[2]), expected, rtol=1e-6)
    flipped = fictitious_field(intensity, -1.0, (0, 0, 1), alpha_v, -0.5, 1)
    assert np.allclose(flipped, -field)
    assert np.allclose(fictitious_field(intensity, 0., (1, 0, 0), alpha_v,
                                        -0.5, 1), 0)
    state = state_from_theta_phi(np.pi/4, 0)
    assert np.allclose(fictitious_field(2 * intensity, state, (0, 0, 1),
                                        alpha_v, -0.5, 1), 2 * field)
