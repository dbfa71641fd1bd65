"""
Measurement protocols for the differential vector light shift

Two pipelines are provided. The delayed-drop pipeline releases the condensates
at different times so that they sample different intensities of one beam and
scans that beam's wave plate. The in-trap pipeline holds both condensates in
their own beams, steps the rf power of one of them and repeats the scan for a
handful of plate angles around the nulling angle.

Both pipelines run bluesky plans from :mod:`vlsnull.plans` against the
simulated apparatus of :mod:`vlsnull.sim`. Everything else in this module is
plain algebra on the measured numbers.
"""
############
# Standard #
############
import logging
from dataclasses import dataclass, field, asdict

###############
# Third Party #
###############
import numpy as np
import pandas as pd
from lmfit.models import LinearModel
from bluesky import RunEngine

##########
# Module #
##########
from . import plans
from .atomprops import Polarizability, vector_polarizability
from .constants import (C, EPS0, MU_B_GAUSS, GRAVITY, GAMMA_RB87, MG_PER_CM,
                        RB87_GF1, W_PER_CM2)
from .polopt import state_from_theta_phi
from .ramsey import RamseyConfig, phase_grid, unfold_phase
from .sim import (InTrapApparatus, DelayedDropApparatus, DifferentialRamsey,
                  WavePlateStage, RfPowerOffset, BiasField)
from .trapfield import GaussianBeam, VLSFieldMap, UP
from .utils.exceptions import ScheduleError, RankDeficientError

logger = logging.getLogger(__name__)

#: Interrogation time limit of the delayed-drop scheme (s)
MAX_DROP_INTERROGATION = 5e-3
#: Half-width of the window in which sin 2x is treated as 2x (rad)
SMALL_ANGLE_WINDOW = 0.0387
#: Reduced chi-square above which a straight line is flagged
CHISQR_LIMIT = 3.0
#: Rotation stage resolution (rad)
STAGE_RESOLUTION = 1e-4
#: Normalization of intensity-normalized fields to nG W^-1 cm^2
NG_CM2_PER_W = 1e9 / W_PER_CM2

#: Beam C configurations of the delayed-drop measurement, keyed by beam axis.
#: ``gradient`` is the peak gradient in mG/cm
DELAYED_DROP_GEOMETRIES = {'z': dict(k_hat=(0., 0., 1.), gradient=234.),
                           'x': dict(k_hat=(1., 0., 0.), gradient=157.)}


def _default_angles():
    return tuple(337.125 + k / 30 for k in range(-3, 3))


def _default_biases():
    return ((0.5, 0., 0.), (0., 0.5, 0.), (0., 0., 0.5))


@dataclass(frozen=True)
class InTrapPlan:
    """
    Schedule of the in-trap nulling measurement

    Attributes
    ----------
    p_a, p_b : float
        Intensity at each condensate per rf unit, W/m^2

    power_a, power_b : float
        Nominal rf powers

    offsets : tuple
        rf offsets relative to balance, one slope point each

    angles : tuple
        Plate angles in degrees

    t : float
        Interrogation time in s

    shots : int
        Shots per ellipse

    repeats : int
        Ellipses per (angle, offset) point

    resolution : float or None
        Rotation stage step in rad
    """
    p_a: float = 8.39e7
    p_b: float = 1.33 * 8.39e7
    power_a: float = 1.0
    power_b: float = 1.0
    offsets: tuple = (-0.1, -0.05, 0.0, 0.05, 0.1)
    angles: tuple = field(default_factory=_default_angles)
    t: float = 15e-3
    shots: int = 200
    repeats: int = 1
    resolution: float = None

    def __post_init__(self):
        if not (self.p_a > 0 and self.p_b > 0):
            raise ScheduleError("Intensity couplings must be positive")
        if len(set(self.offsets)) < 3:
            raise ScheduleError("At least three rf offsets are needed per "
                                "angle, got {}".format(len(set(self.offsets))))
        if len(set(self.angles)) < 3:
            raise ScheduleError("At least three plate angles are needed, "
                                "got {}".format(len(set(self.angles))))
        if not self.t > 0:
            raise ScheduleError("Interrogation time must be positive")
        low = self.p_a * (self.power_a + self.offset0 + min(self.offsets))
        if low < 0 or self.p_b * self.power_b < 0:
            raise ScheduleError("rf offset {} gives a negative intensity"
                                "".format(min(self.offsets)))
        object.__setattr__(self, 'offsets', tuple(self.offsets))
        object.__setattr__(self, 'angles', tuple(self.angles))

    @property
    def offset0(self):
        return balance_offset(self.p_a, self.p_b, self.power_a, self.power_b)

    @property
    def intensity(self):
        """Intensity at either condensate when balanced, W/m^2"""
        return self.p_b * self.power_b

    @property
    def delta_intensity(self):
        return intensity_difference(self.p_a, np.asarray(self.offsets))


@dataclass(frozen=True)
class DelayedDropPlan:
    """
    Schedule of the delayed-drop measurement

    Attributes
    ----------
    delays : tuple
        Release time of each condensate in s

    ramsey_start : float
        Start of the interrogation in s, on the clock of ``delays``. The
        condensate positions are evaluated at this time

    t : float
        Interrogation time in s

    angles : tuple
        Plate angles of the probe beam in degrees

    biases : tuple
        Bias field vectors in G

    shots : int

    repeats : int
    """
    delays: tuple = (0.0, 2.9157e-3)
    ramsey_start: float = 2.9157e-3
    t: float = 250e-6
    angles: tuple = tuple(np.arange(0., 360., 15.))
    biases: tuple = field(default_factory=_default_biases)
    shots: int = 200
    repeats: int = 1

    def __post_init__(self):
        if not 0 < self.t <= MAX_DROP_INTERROGATION:
            raise ScheduleError("Interrogation time {} s is outside "
                                "(0, {}]".format(self.t,
                                                 MAX_DROP_INTERROGATION))
        if len(self.delays) != 2 or min(self.delays) < 0:
            raise ScheduleError("Two non-negative release delays are needed")
        if max(self.delays) > self.ramsey_start:
            raise ScheduleError("Both condensates must be released before "
                                "the interrogation starts")
        if len(set(self.angles)) < 3:
            raise ScheduleError("At least three plate angles are needed")
        object.__setattr__(self, 'delays', tuple(self.delays))
        object.__setattr__(self, 'angles', tuple(float(a)
                                                 for a in self.angles))
        object.__setattr__(self, 'biases',
                           tuple(tuple(float(c) for c in b)
                                 for b in self.biases))

    @property
    def fall_distances(self):
        return tuple(freefall_separation(self.ramsey_start - d)
                     for d in self.delays)

    def positions(self, origin=(0., 0., 0.)):
        """Condensate positions at the start of the interrogation"""
        origin = np.asarray(origin, dtype=float)
        return tuple(origin - UP * dist for dist in self.fall_distances)

    @property
    def separation(self):
        a, b = self.fall_distances
        return abs(a - b)


@dataclass(frozen=True)
class NullingResult:
    """
    Outcome of the in-trap nulling analysis

    Slopes are intensity-normalized fields in G per W/m^2, angles are in
    degrees
    """
    angles: tuple
    slopes: tuple
    slope_errs: tuple
    intercepts: tuple
    theta_slope: float
    theta_slope_err: float
    alpha_V: float
    alpha_v: float
    alpha_v_err: float
    theta_n: float
    theta_n_err: float
    min_angle: float
    min_slope: float
    min_slope_err: float
    suppression_ratio: float
    angle_suppression: float
    intersection: tuple
    offset0: float
    background: float
    flags: tuple = ()

    @property
    def polarizability(self):
        return Polarizability(self.alpha_v, rank='vector',
                              provenance='in-trap nulling fit',
                              flags=self.flags)

    @property
    def min_slope_ng(self):
        """Minimum slope in nG W^-1 cm^2"""
        return self.min_slope * NG_CM2_PER_W

    def to_dict(self):
        info = asdict(self)
        for key in ('angles', 'slopes', 'slope_errs', 'intercepts',
                    'intersection', 'flags'):
            info[key] = list(info[key])
        info['min_slope_ng'] = self.min_slope_ng
        return info


@dataclass(frozen=True)
class DelayedDropResult:
    """
    Sinusoid fit of one delayed-drop plate scan

    ``amplitude`` and ``offset`` are in G, ``theta_n`` and ``null_angle`` in
    degrees and ``gradient`` in mG/cm. ``null_angle`` is the plate angle
    next to ``theta_n`` where the fitted field difference returns to the
    light-off background, NaN when the fit never reaches it.
    """
    bias: tuple
    separation: float
    amplitude: float
    amplitude_err: float
    theta_n: float
    offset: float
    gradient: float
    gradient_err: float
    background: float
    null_angle: float = np.nan

    def to_dict(self):
        info = asdict(self)
        info['bias'] = list(self.bias)
        return info


##################
# Plain algebra  #
##################

def freefall_separation(t_delay, g=GRAVITY):
    """
    Distance fallen from rest after ``t_delay`` seconds
    """
    t_delay = np.asarray(t_delay, dtype=float)
    if np.any(t_delay < 0):
        raise ValueError("Fall time must be non-negative")
    out = 0.5 * g * t_delay**2
    return float(out) if out.ndim == 0 else out


def delta_b_from_phase(delta_phi, delta_phi_bg, t, gamma=GAMMA_RB87):
    """
    Background subtracted field difference in G

    ``(dphi - dphi_bg) / (gamma T)``
    """
    if not t > 0:
        raise ValueError("Interrogation time must be positive")
    return (np.asarray(delta_phi) - delta_phi_bg) / (gamma * t)


def unfold_series(folded, reference, tol=0.25):
    """
    Unfold a sequence of folded phases by continuity

    Each point is unfolded against the previous result, the first against
    ``reference``

    Returns
    -------
    phases : np.ndarray

    ambiguous : np.ndarray of bool
    """
    phases, flags = list(), list()
    ref = reference
    for value in folded:
        phase, amb = unfold_phase(value, ref, tol=tol)
        phases.append(phase)
        flags.append(amb)
        if np.isfinite(phase):
            ref = phase
    return np.asarray(phases), np.asarray(flags, dtype=bool)


def balance_offset(p_a, p_b, power_a, power_b):
    """
    rf offset of beam A that equalizes the two intensities

    ``dP0 = (p_B / p_A) P_B - P_A``
    """
    if not p_a > 0:
        raise ValueError("p_A must be positive")
    return p_b / p_a * power_b - power_a


def intensity_difference(p_a, offset):
    """Intensity difference ``p_A dP'`` for an offset from balance"""
    return p_a * offset


def normalized_intensity(offset, power_a):
    """``dI / I_A = dP' / P_A``"""
    if power_a == 0:
        raise ValueError("P_A must be non-zero")
    return offset / power_a


def suppression_ratio(min_slope, theta_slope):
    """
    Achieved intensity-normalized field relative to its maximum

    The maximum, reached at full circularity, is half the angular slope of
    the intensity-normalized field taken in radians
    """
    if theta_slope == 0:
        raise ValueError("Angular slope must be non-zero")
    return abs(min_slope) / (0.5 * abs(theta_slope))


def angle_suppression(angle, theta_n, degrees=True):
    """``2 |theta - theta_N|`` in radians"""
    diff = angle - theta_n
    if degrees:
        diff = np.deg2rad(diff)
    return float(2 * abs(diff))


def common_intersection(slopes, intercepts, weights=None):
    """
    Point closest to all lines ``y = m_i x + c_i`` in the least squares sense

    Returns
    -------
    x, y : float
    """
    m = np.asarray(slopes, dtype=float)
    c = np.asarray(intercepts, dtype=float)
    if len(m) < 2:
        raise ScheduleError("At least two lines are needed for an "
                            "intersection")
    a = np.column_stack([m, -np.ones_like(m)])
    b = -c
    if weights is not None:
        w = np.sqrt(np.asarray(weights, dtype=float))
        a, b = a * w[:, None], b * w
    if np.linalg.matrix_rank(a) < 2:
        raise ScheduleError("Lines are parallel, no intersection")
    (x, y), *_ = np.linalg.lstsq(a, b, rcond=None)
    return float(x), float(y)


def quantize_angles(angles, resolution=STAGE_RESOLUTION):
    """
    Round plate angles in degrees to the rotation stage step (rad)
    """
    angles = np.asarray(angles, dtype=float)
    if not resolution:
        return angles
    step = np.rad2deg(resolution)
    return np.round(angles / step) * step


def infer_vls_direction(biases, delta_b):
    """
    Direction and size of the light-induced field difference

    Solves ``dB_i = dB_vls (b_i . u)`` for the unit vector ``u`` using the
    directions of three or more bias fields

    Parameters
    ----------
    biases : array-like
        Bias field vectors, shape (n, 3)

    delta_b : array-like
        Light-induced field differences in G

    Returns
    -------
    u : np.ndarray
        Unit vector with its largest component positive

    magnitude : float
        Signed size of the difference, paired with ``u``
    """
    b = np.asarray(biases, dtype=float)
    db = np.asarray(delta_b, dtype=float)
    if b.ndim != 2 or b.shape[1] != 3 or len(b) != len(db):
        raise ValueError("Need one 3-vector bias per measurement")
    norms = np.linalg.norm(b, axis=1)
    if np.any(norms == 0):
        raise RankDeficientError("Zero bias field has no direction")
    b_hat = b / norms[:, None]
    if np.linalg.matrix_rank(b_hat) < 3:
        logger.error("Bias fields %s do not span three dimensions", b)
        raise RankDeficientError("Bias field directions must span three "
                                 "dimensions")
    v, *_ = np.linalg.lstsq(b_hat, db, rcond=None)
    magnitude = float(np.linalg.norm(v))
    if magnitude == 0:
        return np.array([0., 0., 1.]), 0.
    u = v / magnitude
    if u[np.argmax(np.abs(u))] < 0:
        u, magnitude = -u, -magnitude
    return u, magnitude


def aligned_bias_index(biases, k_hat):
    """
    Index of the bias field most nearly parallel or antiparallel to ``k_hat``

    Only the component of the fictitious field along the bias changes the
    field magnitude to first order
    """
    b = np.asarray(biases, dtype=float)
    norms = np.linalg.norm(b, axis=1)
    if not len(b) or np.any(norms == 0):
        raise RankDeficientError("Bias fields must be non-zero")
    cos = np.abs(b @ np.asarray(k_hat, dtype=float)) / norms
    return int(np.argmax(cos))


def power_for_peak_gradient(beam, alpha_v, positions, gradient,
                            g_f=RB87_GF1, f=1):
    """
    Beam power giving a target peak gradient between two positions

    The peak is the difference of the fictitious fields at full circularity
    divided by the separation

    Parameters
    ----------
    beam : GaussianBeam

    positions : tuple
        The two positions in m

    gradient : float
        Target in mG/cm

    Returns
    -------
    power : float
        W
    """
    r_a, r_b = (np.asarray(p, dtype=float) for p in positions)
    unit = beam.with_power(1.0).with_polarization(
                                        state_from_theta_phi(np.pi / 4, 0.))
    fmap = VLSFieldMap([unit], alpha_v, g_f=g_f, f=f)
    per_watt = np.linalg.norm(fmap(r_a) - fmap(r_b))
    sep = np.linalg.norm(r_a - r_b)
    if per_watt == 0 or sep == 0:
        raise ValueError("Positions see no intensity difference")
    return float(gradient * MG_PER_CM * sep / per_watt)


def delayed_drop_beam(plan, alpha_v, geometry='z', waist=100e-6,
                      gradient=None, g_f=RB87_GF1, f=1):
    """
    Probe beam and condensate positions of a delayed-drop configuration

    The pair of condensates straddles the half-waist point below the focus,
    where the intensity slope is largest

    Returns
    -------
    beam : GaussianBeam

    positions : tuple
    """
    try:
        geom = DELAYED_DROP_GEOMETRIES[geometry]
    except KeyError as err:
        raise ValueError("Unknown delayed-drop geometry {!r}"
                         "".format(geometry)) from err
    gradient = geom['gradient'] if gradient is None else gradient
    origin = UP * (plan.separation / 2 - waist / 2)
    positions = plan.positions(origin)
    beam = GaussianBeam(power=1.0, waist=waist, k_hat=geom['k_hat'],
                        label='C')
    power = power_for_peak_gradient(beam, alpha_v, positions, gradient,
                                    g_f=g_f, f=f)
    logger.debug("Beam C along %s needs %.4f W for %.1f mG/cm",
                 geometry, power, gradient)
    return beam.with_power(power), positions


def cross_angle_regression(angles, slopes, slope_errs=None):
    """
    Fit the intensity-normalized field against plate angle

    Angles are centered before the fit. The zero crossing of the line is the
    nulling angle

    Parameters
    ----------
    angles : array-like
        Degrees

    slopes, slope_errs : array-like
        G per W/m^2

    Returns
    -------
    fit : dict
        ``slope`` and ``slope_err`` per rad, ``theta_n`` and ``theta_n_err``
        in degrees, ``redchi`` and the lmfit ``result``
    """
    theta = np.deg2rad(np.asarray(angles, dtype=float))
    y = np.asarray(slopes, dtype=float)
    center = theta.mean()
    x = theta - center
    kwargs = dict(x=x, slope=0., intercept=0.)
    if slope_errs is not None:
        errs = np.asarray(slope_errs, dtype=float)
        if np.all(np.isfinite(errs)) and np.all(errs > 0):
            kwargs['weights'] = 1 / errs
        else:
            logger.warning("Degenerate slope uncertainties, using an "
                           "unweighted regression")
    result = LinearModel(nan_policy='omit').fit(y, **kwargs)
    s = result.params['slope'].value
    b = result.params['intercept'].value
    if s == 0:
        raise ScheduleError("Slopes do not depend on the plate angle")
    if result.covar is not None:
        cov = result.covar
        var_s, var_b, cov_sb = cov[0, 0], cov[1, 1], cov[0, 1]
    else:
        var_s = (result.params['slope'].stderr or 0)**2
        var_b = (result.params['intercept'].stderr or 0)**2
        cov_sb = 0.
    theta_n = center - b / s
    var_n = var_b / s**2 + b**2 * var_s / s**4 - 2 * b * cov_sb / s**3
    return dict(slope=float(s), slope_err=float(np.sqrt(var_s)),
                theta_n=float(np.rad2deg(theta_n)),
                theta_n_err=float(np.rad2deg(np.sqrt(max(var_n, 0)))),
                redchi=float(result.redchi), result=result)


def alpha_from_theta_slope(theta_slope, g_f=RB87_GF1, f=1):
    """
    Reduced vector polarizability from the angular slope in G per W/m^2/rad
    """
    return abs(theta_slope) / 2 * 4 * C * EPS0 * MU_B_GAUSS * abs(g_f) * f


def analyze_nulling(angles, slope_fits, p_a, background=0., offset0=0.,
                    gamma=GAMMA_RB87, g_f=RB87_GF1, f=1):
    """
    Reduce one linear fit per plate angle to a :class:`.NullingResult`

    Parameters
    ----------
    angles : list
        Plate angles in degrees

    slope_fits : list of lmfit.model.ModelResult
        ``delta_b`` against rf offset

    p_a : float
        Intensity per rf unit of beam A, converts offsets to intensities
    """
    flags = list()
    slopes, errs, intercepts = list(), list(), list()
    for angle, res in zip(angles, slope_fits):
        slopes.append(res.params['slope'].value / p_a)
        errs.append((res.params['slope'].stderr or np.nan) / p_a)
        intercepts.append(res.params['intercept'].value)
        if res.nfree > 0 and res.redchi > CHISQR_LIMIT:
            msg = ("field difference at {:.4f} deg is not linear in "
                   "intensity, reduced chi-square {:.2f}"
                   "".format(angle, res.redchi))
            logger.warning(msg)
            flags.append(msg)
    reg = cross_angle_regression(angles, slopes, errs)
    if reg['redchi'] > CHISQR_LIMIT:
        msg = ("slopes are not linear in angle, reduced chi-square {:.2f}"
               "".format(reg['redchi']))
        logger.warning(msg)
        flags.append(msg)
    theta_n = reg['theta_n']
    if not min(angles) <= theta_n <= max(angles):
        msg = "nulling angle {:.4f} deg is outside the scan".format(theta_n)
        logger.warning(msg)
        flags.append(msg)
    reach = np.max(np.abs(np.deg2rad(np.asarray(angles) - theta_n)))
    if reach > SMALL_ANGLE_WINDOW:
        msg = ("angles reach {:.4f} rad from the null, beyond the "
               "small-angle window".format(reach))
        logger.warning(msg)
        flags.append(msg)
    idx = int(np.argmin(np.abs(np.asarray(angles) - theta_n)))
    s = reg['slope']
    # Lines are in (rf offset, G), the intersection abscissa is dP'
    intersection = common_intersection(np.asarray(slopes) * p_a, intercepts)
    result = NullingResult(
        angles=tuple(float(a) for a in angles),
        slopes=tuple(slopes), slope_errs=tuple(errs),
        intercepts=tuple(intercepts),
        theta_slope=s, theta_slope_err=reg['slope_err'],
        alpha_V=abs(s) * gamma / (4 * np.pi),
        alpha_v=alpha_from_theta_slope(s, g_f=g_f, f=f),
        alpha_v_err=alpha_from_theta_slope(reg['slope_err'], g_f=g_f, f=f),
        theta_n=theta_n, theta_n_err=reg['theta_n_err'],
        min_angle=float(angles[idx]), min_slope=float(slopes[idx]),
        min_slope_err=float(errs[idx]),
        suppression_ratio=suppression_ratio(slopes[idx], s),
        angle_suppression=angle_suppression(angles[idx], theta_n),
        intersection=intersection, offset0=offset0,
        background=background, flags=tuple(flags))
    logger.info("Nulling angle %.4f +/- %.4f deg, alpha_v = %.4e C m^2/V",
                result.theta_n, result.theta_n_err, result.alpha_v)
    return result


##############
# Pipelines  #
##############

def run_plan(plan, RE=None):
    """
    Execute a plan and hand back its return value
    """
    RE = RE or RunEngine({}, context_managers=[])
    stash = list()

    def stashed():
        stash.append((yield from plan))

    RE(stashed())
    return stash[0]


def build_in_trap(plan, alpha_v=None, theta_n=337.115, cell_retardance=0.,
                  cell_axis=0., beam_b_offset=0., gradient=22e-3,
                  separation=54.1e-6, beam_c=None, contrast=0.8,
                  readout_noise=0.02, b0=0.681, apply_qz=True, seed=0):
    """
    Simulated in-trap apparatus with its plate, rf control and readout

    Returns
    -------
    devices : dict
        ``apparatus``, ``detector``, ``qwp`` and ``rf``
    """
    alpha_v = vector_polarizability() if alpha_v is None else alpha_v
    app = InTrapApparatus(alpha_v, plan.p_a, plan.p_b,
                          power_a=plan.power_a, power_b=plan.power_b,
                          theta_n=theta_n, cell_retardance=cell_retardance,
                          cell_axis=cell_axis, beam_b_offset=beam_b_offset,
                          separation=separation, gradient=gradient,
                          beam_c=beam_c)
    qwp = WavePlateStage(name='qwp', resolution=plan.resolution,
                         value=float(plan.angles[0]))
    rf = RfPowerOffset(name='rf_offset')
    config = RamseyConfig(t=plan.t, pulse_phases=phase_grid(plan.shots),
                          contrast_a=contrast, contrast_b=contrast,
                          readout_noise=readout_noise, b0=b0,
                          apply_qz=apply_qz)
    det = DifferentialRamsey(app, {'qwp': qwp, 'offset': rf}, config,
                             seed=seed, stage='intrap.shots', name='ramsey')
    return dict(apparatus=app, detector=det, qwp=qwp, rf=rf)


def nulling_pipeline(plan, RE=None, background_repeats=3, **kwargs):
    """
    Run the in-trap nulling measurement and analyze it

    Parameters
    ----------
    plan : InTrapPlan

    RE : RunEngine, optional

    kwargs :
        Passed to :func:`.build_in_trap`

    Returns
    -------
    result : NullingResult

    tables : dict
        ``points`` with every accepted shot set and ``slopes`` with one row
        per angle
    """
    devices = build_in_trap(plan, **kwargs)
    logger.info("Running the in-trap nulling scan over %s angles",
                len(plan.angles))
    scan = run_plan(plans.nulling_scan(devices['detector'], devices['qwp'],
                                       devices['rf'], list(plan.angles),
                                       list(plan.offsets), num=plan.repeats,
                                       background=background_repeats), RE=RE)
    angles = [float(devices['qwp'].quantize(a)) for a in plan.angles]
    result = analyze_nulling(angles, [fit.result for fit in scan['fits']],
                             plan.p_a,
                             background=scan['background']['delta_b'],
                             offset0=plan.offset0)
    return result, nulling_tables(result, scan, plan)


def nulling_tables(result, scan, plan):
    """
    Tables of the in-trap scan: field difference against normalized
    intensity per angle, and slope against angle
    """
    frames = list()
    for angle, table in zip(result.angles, scan['tables']):
        frame = pd.DataFrame({
            'angle': angle,
            'dI_over_I': normalized_intensity(table['rf_offset'],
                                              plan.power_a),
            'dI': intensity_difference(plan.p_a, table['rf_offset']),
            'dB': table['ramsey_delta_b'] - scan['background']['delta_b'],
            'dB_err': table['ramsey_delta_b_err']})
        frames.append(frame)
    points = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    slopes = pd.DataFrame({'angle': result.angles, 'slope': result.slopes,
                           'slope_err': result.slope_errs})
    return dict(points=points, slopes=slopes)


def beam_c_null_test(plan, angle=None, beam_c_qwp=10., delta_intensity=1e6,
                     misalignment=0., RE=None, **kwargs):
    """
    Check that rotating the plate of beam C leaves the signal unchanged

    The slope scan at ``angle`` is repeated with the beam C plate at its
    null and at ``beam_c_qwp`` degrees

    Returns
    -------
    report : dict
        ``excursion`` (largest change of the field difference in G),
        ``uncertainty`` and ``significant``
    """
    angle = plan.angles[len(plan.angles) // 2] if angle is None else angle
    measured = list()
    for qwp_c in (0., beam_c_qwp):
        beam_c = dict(qwp=qwp_c, delta_intensity=delta_intensity,
                      misalignment=misalignment)
        devices = build_in_trap(plan, beam_c=beam_c, **kwargs)
        scan = run_plan(plans.slope_scan(devices['detector'], devices['qwp'],
                                         devices['rf'], angle,
                                         list(plan.offsets),
                                         num=plan.repeats), RE=RE)
        measured.append(scan[1])
    ref, rot = measured
    diff = np.asarray(rot['ramsey_delta_b'] - ref['ramsey_delta_b'])
    errs = np.hypot(np.asarray(rot['ramsey_delta_b_err']),
                    np.asarray(ref['ramsey_delta_b_err']))
    idx = int(np.argmax(np.abs(diff)))
    report = dict(excursion=float(abs(diff[idx])),
                  uncertainty=float(errs[idx]),
                  significant=bool(abs(diff[idx]) > 2 * errs[idx]))
    logger.info("Beam C plate at %.1f deg moves the signal by %.3e G",
                beam_c_qwp, report['excursion'])
    return report


def build_delayed_drop(plan, alpha_v=None, geometry='z', waist=100e-6,
                       gradient=None, background=1.43e-3, theta_n=0.,
                       cell_retardance=0., cell_axis=0., contrast=0.8,
                       readout_noise=0.02, resolution=None, seed=0):
    """
    Simulated delayed-drop apparatus with its plate, bias control and readout
    """
    alpha_v = vector_polarizability() if alpha_v is None else alpha_v
    beam, positions = delayed_drop_beam(plan, alpha_v, geometry=geometry,
                                        waist=waist, gradient=gradient)
    app = DelayedDropApparatus(beam, alpha_v, positions, plan.biases,
                               background=background, theta_n=theta_n,
                               cell_retardance=cell_retardance,
                               cell_axis=cell_axis)
    qwp = WavePlateStage(name='qwp_c', resolution=resolution)
    bias = BiasField(plan.biases, name='bias')
    config = RamseyConfig(t=plan.t, pulse_phases=phase_grid(plan.shots),
                          contrast_a=contrast, contrast_b=contrast,
                          readout_noise=readout_noise)
    det = DifferentialRamsey(app, {'qwp': qwp, 'bias': bias}, config,
                             seed=seed, stage='drop.shots', name='ramsey')
    return dict(apparatus=app, detector=det, qwp=qwp, bias=bias)


def delayed_drop_scan(plan, bias_index=None, RE=None, background_repeats=3,
                      **kwargs):
    """
    Scan the probe plate for one bias field and fit the peak gradient

    Without ``bias_index`` the bias field most nearly along beam C is used

    Returns
    -------
    result : DelayedDropResult

    table : pandas.DataFrame
        Plate angle, field difference and its uncertainty
    """
    devices = build_delayed_drop(plan, **kwargs)
    if bias_index is None:
        bias_index = aligned_bias_index(plan.biases,
                                        devices['apparatus'].beam.k_hat)
    scan = run_plan(plans.delayed_drop_scan(devices['detector'],
                                            devices['qwp'],
                                            list(plan.angles),
                                            bias=devices['bias'],
                                            bias_index=bias_index,
                                            num=plan.repeats,
                                            background=background_repeats),
                    RE=RE)
    fit = scan['fit']
    vals = fit.params
    amp_err = fit.result.params['amplitude'].stderr or np.nan
    sep = plan.separation
    bkg = scan['background']['delta_b']
    try:
        null_angle = fit.backsolve(bkg)['x']
    except ValueError as err:
        logger.warning("No plate angle cancels the light: %s", err)
        null_angle = np.nan
    result = DelayedDropResult(
        bias=plan.biases[bias_index], separation=sep,
        amplitude=vals['amplitude'], amplitude_err=float(amp_err),
        theta_n=vals['theta_n'], offset=vals['offset'] - bkg,
        gradient=vals['amplitude'] / sep / MG_PER_CM,
        gradient_err=float(amp_err) / sep / MG_PER_CM, background=bkg,
        null_angle=float(null_angle))
    logger.info("Peak gradient %.1f +/- %.1f mG/cm over %.1f um",
                result.gradient, result.gradient_err, sep * 1e6)
    table = scan['table']
    table = table.assign(dB=table['ramsey_delta_b'] - bkg).rename(
                    columns={'qwp_c': 'angle', 'ramsey_delta_b_err': 'dB_err'})
    table['gradient'] = table['dB'] / sep / MG_PER_CM
    return result, table[['angle', 'dB', 'dB_err', 'gradient']]


def vls_direction(plan, RE=None, theta_n=0., background_repeats=3,
                  **kwargs):
    """
    Infer the direction of the light-induced field difference

    The plate is set to full circularity and the field difference is
    measured under every bias field of the plan

    Returns
    -------
    u : np.ndarray

    magnitude : float
        G

    measurements : list of dict
    """
    if len(plan.biases) < 3:
        raise RankDeficientError("At least three bias fields are needed")
    devices = build_delayed_drop(plan, theta_n=theta_n, **kwargs)
    meas = run_plan(plans.direction_scan(devices['detector'], devices['qwp'],
                                         devices['bias'], theta_n + 45.,
                                         num=plan.repeats,
                                         background=background_repeats),
                    RE=RE)
    u, mag = infer_vls_direction([m['bias'] for m in meas],
                                 [m['delta_b'] for m in meas])
    logger.info("Light-induced field difference %.3e G along %s", mag, u)
    return u, mag, meas
