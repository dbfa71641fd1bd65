import logging

import pytest
import numpy as np

from vlsnull.spinmix import (COLUMNS, SpinorState, SpinMixParams,
                             quadratic_zeeman, interaction_energy,
                             initial_after_pi2, magnetization, energy,
                             equations_of_motion, overlap, evolve_sma,
                             component_separation, trajectory_energy,
                             oscillation_amplitude, oscillation_periods)
from vlsnull.utils.exceptions import StepSizeError

logger = logging.getLogger(__name__)

SPAN = (0., 0.4)
DT = 5e-4


def gradient_params(mg_per_cm):
    # G/cm
    return SpinMixParams(gradient=mg_per_cm * 1e-3)


@pytest.fixture(scope='module')
def free_run():
    return evolve_sma(initial_after_pi2(), SpinMixParams(), SPAN, DT)


def test_default_energies():
    assert quadratic_zeeman(0.372) / (2 * np.pi) == pytest.approx(9.95,
                                                                  rel=1e-3)
    assert interaction_energy() == pytest.approx(-20.1, rel=2e-3)


def test_initial_state():
    state = initial_after_pi2()
    assert state.rho == (0.25, 0.5, 0.25)
    assert state.theta_s == 0
    assert state.m == 0
    assert state.rho0 == 0.5


def test_magnetization():
    state = SpinorState.from_rho0(0.4, 0.2)
    assert state.rho == pytest.approx((0.2, 0.4, 0.4))
    assert magnetization(state) == pytest.approx(0.2)
    assert magnetization((0.5, 0.5, 0.)) == -0.5


@pytest.mark.parametrize('rho', [(0.5, 0.5), (0.5, 0.6, 0.1),
                                 (-0.1, 0.6, 0.5)])
def test_invalid_states(rho):
    with pytest.raises(ValueError):
        SpinorState(rho=rho)


def test_invalid_params():
    with pytest.raises(ValueError):
        SpinMixParams(q=-1)
    with pytest.raises(ValueError):
        SpinMixParams(r_tf=0)
    with pytest.raises(ValueError):
        SpinMixParams(damping=-1)


def test_equations_follow_energy():
    rho0, theta, m, q, c = 0.45, 0.7, 0.1, 62.5, -20.1
    step = 1e-7
    d_rho, d_theta = equations_of_motion(rho0, theta, m, q, c)
    de_dtheta = (energy(rho0, theta + step, m, q, c)
                 - energy(rho0, theta - step, m, q, c)) / (2 * step)
    de_drho = (energy(rho0 + step, theta, m, q, c)
               - energy(rho0 - step, theta, m, q, c)) / (2 * step)
    assert d_rho == pytest.approx(-2 * de_dtheta, rel=1e-6)
    assert d_theta == pytest.approx(2 * de_drho, rel=1e-6)


def test_overlap():
    assert overlap(0, 5e-6) == 1
    assert overlap(2e-6, 5e-6) == pytest.approx(np.exp(-0.2))
    assert overlap(-2e-6, 5e-6) == overlap(2e-6, 5e-6)


def test_no_interaction_freezes_populations():
    params = SpinMixParams(c=0.)
    traj = evolve_sma(initial_after_pi2(), params, (0., 0.1), 1e-3)
    assert np.allclose(traj['rho_0'], 0.5)
    assert np.allclose(traj['theta_s'], -2 * params.q * traj['t'])


def test_trajectory_bookkeeping(free_run):
    assert list(free_run.columns) == COLUMNS
    assert len(free_run) == 801
    total = free_run[['rho_m1', 'rho_0', 'rho_p1']].sum(axis=1)
    assert np.allclose(total, 1)
    assert np.allclose(free_run['rho_p1'] - free_run['rho_m1'], 0)
    change = free_run['rho_0'] - 0.5
    assert np.allclose(free_run['rho_p1'] - 0.25, -change / 2)
    # No gradient, no separation
    assert np.allclose(free_run['overlap'], 1)


def test_energy_is_conserved():
    params = SpinMixParams()
    traj = evolve_sma(initial_after_pi2(), params, SPAN, DT, separate=False)
    e = trajectory_energy(traj, params)
    assert np.max(np.abs(e - e[0])) < 1e-7 * max(abs(e[0]), 1)


def test_coherent_oscillations(free_run):
    assert free_run['rho_0'].min() == pytest.approx(0.5, abs=1e-3)
    assert 0.6 < free_run['rho_0'].max() < 0.7
    count, period = oscillation_periods(free_run)
    assert count >= 3
    assert 0.03 < period < 0.08
    assert oscillation_amplitude(free_run) == pytest.approx(0.08, abs=0.02)


def test_gradient_suppresses_mixing(free_run):
    traj = evolve_sma(initial_after_pi2(), gradient_params(132), SPAN, DT)
    assert (oscillation_amplitude(traj)
            < 0.2 * oscillation_amplitude(free_run))
    assert traj['overlap'].iloc[-1] < 1e-3


def test_mixing_weakens_with_gradient(free_run):
    amplitudes = [oscillation_amplitude(free_run)]
    for mg_per_cm in (20, 60, 132):
        traj = evolve_sma(initial_after_pi2(), gradient_params(mg_per_cm),
                          SPAN, DT)
        amplitudes.append(oscillation_amplitude(traj))
    assert np.all(np.diff(amplitudes) <= 1e-4)
    assert amplitudes[-1] < amplitudes[0]


def test_weak_gradient_keeps_overlap():
    traj = evolve_sma(initial_after_pi2(), gradient_params(5), SPAN, DT)
    assert traj['overlap'].min() > 0.9


def test_component_separation():
    params = gradient_params(132)
    sep = component_separation(params, (0., 1.), dt=1e-3)
    expected = 2 * params.acceleration / params.trap_frequency**2
    assert sep['separation'].iloc[-1] == pytest.approx(expected, rel=1e-3)
    assert expected == pytest.approx(15e-6, rel=0.05)
    assert np.allclose(sep['y_m1'], -sep['y_p1'])
    # The +1 component is pushed down
    assert sep['y_p1'].iloc[-1] < 0


def test_step_size_is_checked():
    with pytest.raises(StepSizeError):
        evolve_sma(initial_after_pi2(), SpinMixParams(), SPAN, 1e-2)
    with pytest.raises(ValueError):
        evolve_sma(initial_after_pi2(), SpinMixParams(), (0.1, 0.), DT)
