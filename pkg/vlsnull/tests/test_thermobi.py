import logging
from dataclasses import replace

import pytest
import numpy as np

from vlsnull.thermobi import (WindowMaterial, HeatingScenario,
                              absorbed_power, characteristic_temperature,
                              validity_window, temp_rise, axial_stress,
                              opd_bound, optoelastic_coefficient,
                              retardance_max, retardance_profile,
                              profile_table, thermal_report,
                              QUOTED_THETA_MAX)

logger = logging.getLogger(__name__)


@pytest.fixture(scope='module')
def silica():
    return WindowMaterial()


@pytest.fixture(scope='module')
def scenario():
    return HeatingScenario()


def test_heating_chain(scenario, silica):
    assert absorbed_power(scenario, silica) == pytest.approx(5e-3)
    assert characteristic_temperature(scenario, silica) == pytest.approx(
                                                        60.7e-3, rel=2e-3)
    dT, t0, tau = temp_rise(scenario, silica)
    assert dT == pytest.approx(0.399, rel=2e-3)
    assert tau == pytest.approx(0.028, rel=2e-3)
    sigma = axial_stress(dT, silica)
    assert sigma == pytest.approx(7.19e3, rel=2e-3)
    opd, theta = opd_bound(sigma, silica, scenario.thickness)
    assert opd == pytest.approx(1.22e-10, rel=3e-3)
    assert theta == pytest.approx(7.21e-4, rel=3e-3)


def test_optoelastic_coefficient(silica):
    assert optoelastic_coefficient(silica) == pytest.approx(-8.0e-8,
                                                            rel=2e-3)
    assert silica.optoelastic == optoelastic_coefficient(silica)


def test_far_field_retardance(scenario, silica):
    theta_max = retardance_max(scenario, silica)
    assert abs(theta_max) == pytest.approx(2.87e-4, rel=3e-3)
    # Evaluated value is about twice the quoted one
    assert abs(theta_max) / QUOTED_THETA_MAX == pytest.approx(2.05, abs=0.02)
    doubled = replace(scenario, power=20.)
    assert retardance_max(doubled, silica) == pytest.approx(2 * theta_max)


def test_retardance_profile(scenario, silica):
    theta, theta_max, circ = retardance_profile(scenario, silica, 0.)
    assert theta == 0
    assert circ == pytest.approx(np.sin(2 * abs(theta_max)))
    at_waist, _, _ = retardance_profile(scenario, silica, scenario.radius)
    assert at_waist / theta_max == pytest.approx(1 + (np.exp(-2) - 1) / 2)
    r = np.linspace(0, 20 * scenario.radius, 101)
    profile, _, _ = retardance_profile(scenario, silica, r)
    assert np.all(np.diff(np.abs(profile)) > 0)
    assert profile[-1] / theta_max == pytest.approx(1, abs=3e-3)
    # Close to the axis the profile starts quadratically
    tiny = 1e-3 * scenario.radius
    near, _, _ = retardance_profile(scenario, silica, tiny)
    assert near / theta_max == pytest.approx(tiny**2 / scenario.radius**2,
                                             rel=1e-3)


def test_heating_regimes(scenario, silica):
    t0 = characteristic_temperature(scenario, silica)
    rate = 2 * silica.diffusivity / scenario.radius**2
    # Linear well before the diffusion time
    early, _, _ = temp_rise(scenario, silica, 1e-4)
    assert early == pytest.approx(t0 * rate * 1e-4, rel=1e-2)
    # Logarithmic well after it
    late = temp_rise(scenario, silica, [1., 10.])[0]
    assert late[1] - late[0] == pytest.approx(t0 * np.log(10), rel=1e-2)
    with pytest.raises(ValueError):
        temp_rise(scenario, silica, -1.)


def test_validity_window(scenario, silica):
    tau, t_thick, valid = validity_window(scenario, silica)
    assert tau < scenario.exposure < t_thick
    assert valid
    assert not validity_window(scenario, silica, t=100.)[2]


def test_parameter_validation():
    with pytest.raises(ValueError):
        WindowMaterial(poisson=0.6)
    with pytest.raises(ValueError):
        WindowMaterial(mu=-1)
    with pytest.raises(ValueError):
        HeatingScenario(power=0)


def test_profile_table(scenario, silica):
    table = profile_table(scenario, silica)
    assert list(table.columns) == ['r', 'theta', 'circularity']
    assert len(table) == 201
    assert table['theta'].iloc[0] == 0
    assert np.all(table['circularity'] >= 0)


def test_thermal_report(scenario, silica):
    report = thermal_report()
    assert report['delta_t'] == pytest.approx(0.399, rel=2e-3)
    assert report['theta_ratio'] == pytest.approx(0.5677, rel=1e-3)
    assert report['quoted_theta_max'] == QUOTED_THETA_MAX
    assert report['theta_max_discrepancy'] == pytest.approx(2.05, abs=0.02)
    assert report['flags'] == []
    long_exposure = thermal_report(replace(scenario, exposure=100.), silica)
    assert any('validity' in flag for flag in long_exposure['flags'])
