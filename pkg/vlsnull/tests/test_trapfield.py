import logging

import pytest
import numpy as np

from vlsnull.constants import RB87_MASS, W_PER_CM2, MG_PER_CM
from vlsnull.polopt import state_from_theta_phi
from vlsnull.trapfield import (GaussianBeam, MagneticEnvironment, UP,
                               intensity_at, total_intensity, potential_depth,
                               trap_minimum, trap_frequencies, VLSFieldMap,
                               vls_field_map, field_map_table, grid_points,
                               vls_zeeman_shift, dephasing_time)
from vlsnull.sim import field_per_intensity
from vlsnull.utils.exceptions import TrapUnboundError

logger = logging.getLogger(__name__)


@pytest.fixture(scope='module')
def trap_beam():
    # Single horizontal beam with a small residual circularity
    return GaussianBeam(0.55, 67e-6,
                        polarization=state_from_theta_phi(
                                            0.5 * np.arcsin(0.07), 0))


@pytest.fixture(scope='module')
def site(trap_beam, alpha_s):
    return trap_minimum([trap_beam], alpha_s, RB87_MASS)


def test_peak_intensity(trap_beam):
    assert trap_beam.peak_intensity / W_PER_CM2 == pytest.approx(7.8e3,
                                                                 rel=1e-2)
    assert intensity_at(trap_beam, (0, 0, 0)) == pytest.approx(
                                                    trap_beam.peak_intensity)


def test_intensity_profile(trap_beam):
    off_axis = intensity_at(trap_beam, (trap_beam.waist, 0, 0))
    assert off_axis == pytest.approx(trap_beam.peak_intensity * np.exp(-2))
    # On axis at one Rayleigh range the peak halves
    far = intensity_at(trap_beam, (0, 0, trap_beam.rayleigh_range))
    assert far == pytest.approx(trap_beam.peak_intensity / 2)
    dark = trap_beam.with_power(0.0)
    assert intensity_at(dark, (0, 0, 0)) == 0
    assert total_intensity([trap_beam, trap_beam], (0, 0, 0)) == \
        pytest.approx(2 * trap_beam.peak_intensity)


def test_intensity_broadcasts(trap_beam):
    points = grid_points(np.linspace(-1e-4, 1e-4, 5), 0, [0, 1e-3])
    assert points.shape == (10, 3)
    assert intensity_at(trap_beam, points).shape == (10,)


def test_beam_validation():
    with pytest.raises(ValueError):
        GaussianBeam(-1, 67e-6)
    with pytest.raises(ValueError):
        GaussianBeam(1, 0)
    with pytest.raises(ValueError):
        GaussianBeam(1, 67e-6, k_hat=(0, 0, 0))
    with pytest.raises(ValueError):
        GaussianBeam(1, 67e-6, focus=(0, 0))


def test_gravitational_sag(site):
    # The condensate sits just under 10 um below the focus
    assert site[1] < 0
    assert -site[1] == pytest.approx(10e-6, rel=0.1)
    assert np.allclose(site[[0, 2]], 0)


def test_vls_at_trap_site(trap_beam, site, alpha_v):
    field_map = VLSFieldMap([trap_beam], alpha_v)
    b_vls = field_map.magnitude(site) * 1e3
    assert b_vls == pytest.approx(0.252, rel=0.01)
    # Quoted 0.3 mG is about a sixth above the evaluated field
    assert b_vls / 0.3 == pytest.approx(0.84, abs=0.01)
    assert b_vls == pytest.approx(field_per_intensity(alpha_v) * 0.07
                                  * intensity_at(trap_beam, site) * 1e3,
                                  rel=1e-6)
    gradient = abs(field_map.gradient(site)) / MG_PER_CM
    assert gradient == pytest.approx(21.8, rel=0.05)
    assert gradient == pytest.approx(24, rel=0.15)
    # Field points along the beam
    b = field_map(site)
    assert np.allclose(b[:2], 0)


def test_trap_frequencies(trap_beam, site, alpha_s):
    omegas, axes = trap_frequencies([trap_beam], alpha_s, RB87_MASS, site)
    assert np.all(np.isfinite(omegas))
    assert np.all(omegas > 0)
    # The weak axis is along the beam
    assert abs(axes[2, 0]) == pytest.approx(1, abs=1e-3)
    assert omegas[0] < omegas[1]


def test_trap_depth(trap_beam, alpha_s):
    assert potential_depth([trap_beam], alpha_s) > 0


def test_weak_beam_is_unbound(alpha_s):
    weak = GaussianBeam(1e-6, 67e-6)
    with pytest.raises(TrapUnboundError):
        trap_minimum([weak], alpha_s, RB87_MASS)


def test_sag_grows_as_power_drops(trap_beam, alpha_s):
    sags = list()
    for power in (2.0, 1.0, 0.55, 0.3, 0.2, 0.1):
        try:
            site = trap_minimum([trap_beam.with_power(power)], alpha_s,
                                RB87_MASS)
        except TrapUnboundError:
            break
        sags.append(-site[1])
    else:
        pytest.fail("Trap held at every power")
    assert len(sags) >= 3
    assert np.all(np.diff(sags) > 0)


def test_sag_grows_with_weaker_polarizability(alpha_s):
    beam = GaussianBeam(1.0, 67e-6)
    full = trap_minimum([beam], alpha_s, RB87_MASS)
    half = trap_minimum([beam], alpha_s.value / 2, RB87_MASS)
    assert -half[1] > -full[1]
    # Only the product of power and polarizability sets the potential
    dim = trap_minimum([beam.with_power(0.5)], alpha_s, RB87_MASS)
    assert half[1] == pytest.approx(dim[1], rel=1e-4)


def test_field_map_is_linear_in_power(trap_beam, alpha_v):
    points = grid_points(np.linspace(-5e-5, 5e-5, 5), [-1e-5, 0], [0, 1e-3])
    single = vls_field_map([trap_beam], alpha_v)(points)
    for scale in (0.5, 2.0, 7.0):
        scaled = vls_field_map([trap_beam.with_power(scale
                                                     * trap_beam.power)],
                               alpha_v)(points)
        assert np.allclose(scaled, scale * single, rtol=1e-12, atol=0)
    dark = vls_field_map([trap_beam.with_power(0.)], alpha_v)(points)
    assert np.all(dark == 0)


def test_opposite_beams_cancel(trap_beam, alpha_v):
    forward = trap_beam
    backward = GaussianBeam(trap_beam.power, trap_beam.waist,
                            k_hat=(0, 0, -1),
                            polarization=trap_beam.polarization)
    field_map = vls_field_map([forward, backward], alpha_v)
    points = grid_points([0, 1e-5], [-1e-5, 0], [0])
    assert np.allclose(field_map(points), 0, atol=1e-15)


def test_field_map_table(trap_beam, alpha_v):
    field_map = VLSFieldMap([trap_beam], alpha_v)
    points = grid_points(0, np.linspace(-2e-5, 2e-5, 5), 0)
    table = field_map_table(field_map, points)
    assert list(table.columns) == ['x', 'y', 'z', 'Bx', 'By', 'Bz', 'B']
    assert np.allclose(table['B'], field_map.magnitude(points))
    env = MagneticEnvironment(b0=(0, 0.681, 0))
    biased = field_map_table(field_map, points, env=env)
    assert np.allclose(biased['By'], 0.681)
    assert np.all(biased['B'] > 0.681)


def test_environment_gradient():
    env = MagneticEnvironment(b0=(0, 1, 0), gradient=22e-3)
    # 22 mG/cm over 1 cm
    assert env.field_at(0.01 * UP)[1] == pytest.approx(1.022)
    assert env.b0_magnitude == 1


def test_vls_zeeman_shift_along_bias(alpha_v):
    i0 = 8.39e3 * W_PER_CM2
    shift = vls_zeeman_shift(i0, 0.035, 0.0, 1, 1, alpha_v)
    assert shift.exact == pytest.approx(shift.first_order, rel=1e-9)
    flipped = vls_zeeman_shift(i0, -0.035, 0.0, 1, 1, alpha_v)
    assert flipped.first_order == pytest.approx(-shift.first_order)
    assert vls_zeeman_shift(i0, 0.035, 0.0, -1, 1, alpha_v).first_order == \
        pytest.approx(-shift.first_order)


def test_vls_zeeman_shift_perpendicular(alpha_v):
    i0 = 8.39e3 * W_PER_CM2
    along = vls_zeeman_shift(i0, 0.035, 0.0, 1, 1, alpha_v)
    across = vls_zeeman_shift(i0, 0.035, np.pi / 2, 1, 1, alpha_v)
    # Only the second order survives
    assert abs(across.first_order) < 1e-12 * abs(along.first_order)
    assert abs(across.exact) < 1e-3 * abs(along.exact)
    with pytest.raises(ValueError):
        vls_zeeman_shift(i0, 0.035, 0.0, 1, 1, alpha_v, b0=0)


def test_dephasing_time():
    assert dephasing_time(13e-6, 22e-3) == pytest.approx(25e-3, rel=0.02)
    assert dephasing_time(13e-6, 0) == np.inf
    assert dephasing_time(13e-6, 44e-3) == pytest.approx(
                                    dephasing_time(13e-6, 22e-3) / 2)
    assert dephasing_time(13e-6, -22e-3) == dephasing_time(13e-6, 22e-3)
