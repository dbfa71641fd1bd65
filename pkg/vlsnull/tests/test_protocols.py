import logging

import pytest
import numpy as np

from vlsnull.constants import GAMMA_RB87, MG_PER_CM
from vlsnull.polopt import state_from_theta_phi
from vlsnull.protocols import (InTrapPlan, DelayedDropPlan, freefall_separation,
                               delta_b_from_phase, unfold_series,
                               balance_offset, intensity_difference,
                               normalized_intensity, suppression_ratio,
                               angle_suppression, common_intersection,
                               quantize_angles, infer_vls_direction,
                               aligned_bias_index, power_for_peak_gradient,
                               delayed_drop_beam, cross_angle_regression,
                               alpha_from_theta_slope, nulling_pipeline,
                               beam_c_null_test, delayed_drop_scan,
                               vls_direction)
from vlsnull.trapfield import GaussianBeam, VLSFieldMap
from vlsnull.utils.exceptions import ScheduleError, RankDeficientError

logger = logging.getLogger(__name__)


def test_freefall_separation():
    assert freefall_separation(3e-3) == pytest.approx(44.1e-6, rel=1e-3)
    assert freefall_separation(2.7e-3) == pytest.approx(35.8e-6, rel=1e-3)
    assert np.allclose(freefall_separation([0, 1e-3]), [0, 4.905e-6])
    with pytest.raises(ValueError):
        freefall_separation(-1e-3)


def test_delta_b_from_phase():
    t = 15e-3
    delta_b = delta_b_from_phase(1.0, 0.5, t)
    assert delta_b * GAMMA_RB87 * t == pytest.approx(0.5)
    assert delta_b_from_phase(0.5, 0.5, t) == 0
    with pytest.raises(ValueError):
        delta_b_from_phase(1.0, 0.5, 0)


def test_unfold_series():
    truth = np.array([-0.4, -0.3, -0.2])
    phases, ambiguous = unfold_series(np.abs(truth), reference=-0.5)
    assert np.allclose(phases, truth)
    assert not ambiguous.any()
    # Branch follows the reference
    truth = 2*np.pi + np.array([0.3, 0.2, 0.35])
    folded = np.arccos(np.cos(truth))
    phases, ambiguous = unfold_series(folded, reference=2*np.pi + 0.4)
    assert np.allclose(phases, truth)
    assert not ambiguous.any()


def test_intensity_balance():
    assert balance_offset(8.39e7, 1.33 * 8.39e7, 1, 1) == pytest.approx(0.33)
    assert intensity_difference(8.39e3, 0.05) == pytest.approx(419.5)
    assert normalized_intensity(0.05, 0.5) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        balance_offset(0, 1, 1, 1)
    with pytest.raises(ValueError):
        normalized_intensity(0.05, 0)


def test_suppression():
    assert suppression_ratio(1e-3, -2e-2) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        suppression_ratio(1e-3, 0)
    assert angle_suppression(337.125, 337.115) == pytest.approx(
                                                    2 * np.deg2rad(0.01))
    assert angle_suppression(0.1, 0.3, degrees=False) == pytest.approx(0.4)


def test_common_intersection():
    # Three lines through (1, 2)
    x, y = common_intersection([1, -1, 3], [1, 3, -1])
    assert (x, y) == pytest.approx((1, 2))
    x, y = common_intersection([1, -1, 3], [1, 3, -1], weights=[1, 2, 3])
    assert (x, y) == pytest.approx((1, 2))
    with pytest.raises(ScheduleError):
        common_intersection([1], [0])
    with pytest.raises(ScheduleError):
        common_intersection([2, 2], [0, 1])


def test_quantize_angles():
    step = np.rad2deg(1e-4)
    angles = quantize_angles([337.125, 337.1])
    assert np.allclose(np.round(angles / step), angles / step)
    assert np.all(np.abs(angles - [337.125, 337.1]) <= step / 2)
    assert np.array_equal(quantize_angles([1.23], resolution=None), [1.23])


def test_infer_vls_direction():
    u = np.array([0.6, 0., 0.8])
    biases = [(0.5, 0, 0), (0, 0.5, 0), (0.3, 0, 0.4), (0, 0.2, 0.2)]
    b_hat = [np.asarray(b) / np.linalg.norm(b) for b in biases]
    delta_b = [2e-3 * (b @ u) for b in b_hat]
    found, mag = infer_vls_direction(biases, delta_b)
    assert np.allclose(found, u)
    assert mag == pytest.approx(2e-3)
    # Largest component is reported positive
    found, mag = infer_vls_direction(biases, [-d for d in delta_b])
    assert np.allclose(found, u)
    assert mag == pytest.approx(-2e-3)


def test_infer_vls_direction_under_noise():
    biases = [(0.5, 0, 0), (0, 0.5, 0), (0, 0, 0.5),
              (-0.5, 0, 0), (0, -0.5, 0), (0, 0, -0.5)]
    b_hat = np.array([np.asarray(b) / np.linalg.norm(b) for b in biases])
    errors = list()
    for seed in range(100):
        rng = np.random.default_rng(seed)
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        magnitude = 2e-3
        delta_b = magnitude * (b_hat @ u)
        delta_b += rng.normal(0, 0.01 * magnitude, len(biases))
        found, mag = infer_vls_direction(biases, delta_b)
        cos = np.clip(abs(found @ u), 0, 1)
        errors.append(np.rad2deg(np.arccos(cos)))
        assert abs(mag) == pytest.approx(magnitude, rel=0.05)
    assert max(errors) < 2


@pytest.mark.parametrize('scale', [1e-3, 0.5, 40.])
def test_infer_vls_direction_ignores_scale(scale):
    biases = [(0.5, 0, 0), (0, 0.5, 0), (0.3, 0, 0.4), (0, 0.2, 0.2)]
    delta_b = [1.2e-3, -0.4e-3, 0.9e-3, 0.1e-3]
    u, mag = infer_vls_direction(biases, delta_b)
    scaled_u, scaled_mag = infer_vls_direction(biases,
                                               np.multiply(delta_b, scale))
    assert np.allclose(scaled_u, u)
    assert scaled_mag == pytest.approx(scale * mag)
    flipped_u, flipped_mag = infer_vls_direction(biases,
                                                 np.multiply(delta_b, -scale))
    assert np.allclose(flipped_u, u)
    assert flipped_mag == pytest.approx(-scale * mag)
    # Only the bias directions enter
    stronger = infer_vls_direction(np.multiply(biases, 3.), delta_b)
    assert np.allclose(stronger[0], u)


def test_infer_vls_direction_rank():
    coplanar = [(1, 0, 0), (0, 1, 0), (1, 1, 0)]
    with pytest.raises(RankDeficientError):
        infer_vls_direction(coplanar, [1, 2, 3])
    with pytest.raises(RankDeficientError):
        infer_vls_direction([(0, 0, 0), (0, 1, 0), (0, 0, 1)], [1, 2, 3])
    with pytest.raises(ValueError):
        infer_vls_direction([(1, 0, 0)], [1, 2])


def test_aligned_bias_index():
    biases = ((0.5, 0., 0.), (0., 0.5, 0.), (0., 0., -0.5))
    assert aligned_bias_index(biases, (0, 0, 1)) == 2
    assert aligned_bias_index(biases, (1, 0, 0)) == 0
    with pytest.raises(RankDeficientError):
        aligned_bias_index(((0, 0, 0),), (0, 0, 1))


def test_schedules():
    plan = InTrapPlan()
    assert plan.p_a == pytest.approx(8.39e7)
    assert plan.offset0 == pytest.approx(0.33)
    assert plan.intensity == pytest.approx(1.33 * 8.39e7)
    assert np.allclose(plan.delta_intensity,
                       8.39e7 * np.asarray(plan.offsets))
    with pytest.raises(ScheduleError):
        InTrapPlan(offsets=(0., 0.1))
    with pytest.raises(ScheduleError):
        InTrapPlan(angles=(1., 2.))
    with pytest.raises(ScheduleError):
        InTrapPlan(offsets=(-2., 0., 0.1))

    drop = DelayedDropPlan()
    assert drop.separation == pytest.approx(41.7e-6, rel=1e-3)
    bottom, top = drop.positions()
    assert top[1] == 0 and bottom[1] == pytest.approx(-drop.separation)
    with pytest.raises(ScheduleError):
        DelayedDropPlan(t=6e-3)
    with pytest.raises(ScheduleError):
        DelayedDropPlan(delays=(0., 4e-3))


def test_power_for_peak_gradient(alpha_v):
    plan = DelayedDropPlan()
    beam, positions = delayed_drop_beam(plan, alpha_v, geometry='z')
    full = beam.with_polarization(state_from_theta_phi(np.pi / 4, 0))
    fmap = VLSFieldMap([full], alpha_v)
    diff = np.linalg.norm(fmap(positions[0]) - fmap(positions[1]))
    assert diff / plan.separation / MG_PER_CM == pytest.approx(234)
    # The pair straddles the half-waist point
    assert np.mean([p[1] for p in positions]) == pytest.approx(-50e-6)
    with pytest.raises(ValueError):
        delayed_drop_beam(plan, alpha_v, geometry='q')
    with pytest.raises(ValueError):
        power_for_peak_gradient(GaussianBeam(1., 1e-4), alpha_v,
                                [(0, 0, 0), (0, 0, 0)], 100.)


def test_cross_angle_regression(alpha_v):
    angles = 337.115 + np.array([-0.2, -0.1, 0., 0.1, 0.2])
    theta_slope = 9.6e-11
    slopes = theta_slope * np.deg2rad(angles - 337.115)
    fit = cross_angle_regression(angles, slopes)
    assert fit['theta_n'] == pytest.approx(337.115, abs=1e-9)
    assert fit['slope'] == pytest.approx(theta_slope)
    assert alpha_from_theta_slope(2 * 4.805e-11) == pytest.approx(
                                        abs(alpha_v.value), rel=2e-3)


def test_nulling_pipeline(RE, alpha_v):
    plan = InTrapPlan(shots=60, angles=tuple(337.115 + d for d in
                                             (-0.2, -0.1, 0., 0.1, 0.2)))
    result, tables = nulling_pipeline(plan, RE=RE, alpha_v=alpha_v,
                                      readout_noise=0.)
    assert result.theta_n == pytest.approx(337.115, abs=1e-4)
    assert result.alpha_v == pytest.approx(abs(alpha_v.value), rel=1e-3)
    assert result.min_angle == pytest.approx(337.115)
    assert result.suppression_ratio < 1e-3
    assert result.offset0 == pytest.approx(0.33)
    # Every line passes through the balanced point
    x, y = result.intersection
    assert x == pytest.approx(0, abs=1e-3)
    assert y == pytest.approx(result.background, rel=1e-4)
    assert len(tables['slopes']) == 5
    assert len(tables['points']) == 25
    assert set(tables['points'].columns) == {'angle', 'dI_over_I', 'dI',
                                             'dB', 'dB_err'}
    info = result.to_dict()
    assert info['min_slope_ng'] == pytest.approx(result.min_slope * 1e5)


def test_nulling_pipeline_with_readout_noise(RE, alpha_v):
    # Six angles over 10 arcmin with readout noise on every shot
    plan = InTrapPlan(shots=1000, repeats=2)
    result, _ = nulling_pipeline(plan, RE=RE, alpha_v=alpha_v,
                                 readout_noise=0.02, seed=7)
    assert result.alpha_v == pytest.approx(abs(alpha_v.value), rel=0.06)
    assert result.theta_n == pytest.approx(337.115, abs=0.005)
    assert result.min_angle == pytest.approx(337.125)
    # Achieved over maximum field, from the fitted quantities
    assert result.suppression_ratio == pytest.approx(
                abs(result.min_slope) / (0.5 * abs(result.theta_slope)))
    expected = abs(np.sin(2 * np.deg2rad(337.125 - 337.115)))
    assert result.suppression_ratio == pytest.approx(expected, rel=0.4)
    assert angle_suppression(337.125, 337.115) == pytest.approx(3.3e-4,
                                                                rel=0.1)


def test_beam_c_null(RE, in_trap_plan, alpha_v):
    quiet = beam_c_null_test(in_trap_plan, RE=RE, alpha_v=alpha_v)
    assert quiet['excursion'] == 0
    assert not quiet['significant']
    tilted = beam_c_null_test(in_trap_plan, misalignment=0.1, RE=RE,
                              alpha_v=alpha_v)
    assert tilted['significant']


def test_delayed_drop_scan(RE, drop_plan, alpha_v):
    result, table = delayed_drop_scan(drop_plan, RE=RE, alpha_v=alpha_v)
    # The bias along beam C is picked
    assert result.bias == (0., 0., 0.5)
    assert result.gradient == pytest.approx(234, rel=0.02)
    assert result.background == pytest.approx(1.43e-3, rel=0.01)
    assert abs(result.offset) < 1e-5
    folded = np.mod(result.theta_n, 90)
    assert min(folded, 90 - folded) < 0.5
    # The light cancels within a fraction of a degree of the fitted null
    assert abs(result.null_angle - result.theta_n) < 0.5
    assert result.to_dict()['null_angle'] == result.null_angle
    assert list(table.columns) == ['angle', 'dB', 'dB_err', 'gradient']
    assert len(table) == len(drop_plan.angles)


def test_vls_direction(RE, drop_plan, alpha_v):
    u, magnitude, meas = vls_direction(drop_plan, RE=RE, alpha_v=alpha_v)
    assert len(meas) == 3
    assert u[2] > 0.99
    expected = 234 * MG_PER_CM * drop_plan.separation
    assert abs(magnitude) == pytest.approx(expected, rel=0.02)
