"""
Bluesky plans for the light shift measurements
"""
############
# Standard #
############
import logging

###############
# Third Party #
###############
import numpy as np
from bluesky.plan_stubs import mv, trigger_and_read
from bluesky.preprocessors import run_decorator, subs_decorator

##########
# Module #
##########
from .callbacks import LinearFit, SinusoidFit, TableCollector, apply_filters
from .callbacks import finite
from .utils.argutils import field_prepend, as_list
from .utils.exceptions import FilterCountError

logger = logging.getLogger(__name__)


def measure(detectors, num=1, filters=None, drop_missing=True,
            max_dropped=10):
    """
    Gather a fixed number of measurements from a group of detectors

    Parameters
    ----------
    detectors : list
        List of detector objects to read and bundle

    num : int
        Number of measurements that pass filters

    filters : dict, optional
        Key, callable pairs of event keys and single input functions that
        evaluate to True or False. For more infromation see
        :meth:`.apply_filters`

    drop_missing : bool, optional
        Choice to include events where event keys are missing

    max_dropped : int, optional
        Maximum number of events to drop before raising a
        :class:`.FilterCountError`

    Returns
    -------
    data : list
        List of mock-event documents
    """
    logger.debug("Running measure with detectors %s, num %s",
                 [d.name for d in detectors], num)
    shots   = 0
    dropped = 0
    data    = list()
    filters = filters or dict()
    while shots < num:
        reading = yield from trigger_and_read(detectors)
        det_reads = dict((k, v['value']) for k, v in reading.items())
        #Apply filters
        if apply_filters(det_reads, filters=filters,
                         drop_missing=drop_missing):
            shots += 1
            data.append(det_reads)
        else:
            dropped += 1
            logger.debug('Ignoring inadequate measurement, '
                         'attempting to gather again...')
        if dropped > max_dropped:
            bad = dict((key, det_reads.get(key)) for key in filters)
            logger.error('Dropped too many events, latest bad values were %s',
                         bad)
            raise FilterCountError("Dropped {} events".format(dropped))
    logger.debug("Finished taking %s measurements, filters removed %s events",
                 len(data), dropped)
    return data


def average_reading(data, key, err_key=None):
    """
    Inverse-variance mean of one field over a list of readings

    Returns
    -------
    value, error : float
        Plain mean and standard error when the uncertainties are missing or
        degenerate
    """
    vals = np.asarray([d[key] for d in data], dtype=float)
    if err_key:
        errs = np.asarray([d[err_key] for d in data], dtype=float)
        if np.all(np.isfinite(errs)) and np.all(errs > 0):
            w = 1 / errs**2
            return float(np.sum(w * vals) / np.sum(w)), float(np.sqrt(1/np.sum(w)))
    if len(vals) > 1:
        return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals)))
    return float(vals.mean()), np.nan


def _ramsey_filters(detector, *motors):
    filters = {field_prepend('delta_b', detector): finite}
    filters.update((motor.name, finite) for motor in motors)
    return filters


def measure_background(detector, num=1, max_dropped=10, set_reference=True):
    """
    Measure the differential phase with the dipole light extinguished

    Must run inside an open run. The light is switched back on afterwards and
    the measured phase is installed as the unfolding reference of the
    detector

    Parameters
    ----------
    detector : DifferentialRamsey

    num : int, optional
        Number of shot sets averaged together

    Returns
    -------
    background : dict
        ``phase``, ``phase_err``, ``delta_b`` and ``delta_b_err``
    """
    yield from mv(detector.light, False)
    try:
        data = yield from measure([detector], num=num,
                                  filters=_ramsey_filters(detector),
                                  max_dropped=max_dropped)
    finally:
        yield from mv(detector.light, True)
    phase, phase_err = average_reading(data,
                                       field_prepend('phase', detector),
                                       field_prepend('phase_err', detector))
    delta_b, delta_b_err = average_reading(data,
                                           field_prepend('delta_b', detector),
                                           field_prepend('delta_b_err',
                                                         detector))
    if set_reference:
        yield from mv(detector.reference, phase)
    logger.info("Background phase %.4f +/- %.4f rad", phase, phase_err)
    return dict(phase=phase, phase_err=phase_err, delta_b=delta_b,
                delta_b_err=delta_b_err)


def slope_scan(detector, qwp, rf, angle, offsets, num=1, max_dropped=10,
               md=None):
    """
    Scan the rf power offset at one plate angle and fit the field difference

    Parameters
    ----------
    detector : DifferentialRamsey

    qwp : WavePlateStage

    rf : RfPowerOffset

    angle : float
        Plate angle in degrees

    offsets : list
        rf power offsets relative to balance

    num : int, optional
        Shot sets per offset

    Returns
    -------
    fit : LinearFit
        Weighted fit of ``delta_b`` against the rf offset

    table : pandas.DataFrame
        Every accepted event
    """
    y = field_prepend('delta_b', detector)
    fit = LinearFit(y, rf.name, update_every=None,
                    yerr=field_prepend('delta_b_err', detector),
                    filters=_ramsey_filters(detector, rf))
    table = TableCollector()
    _md = {'plan_name': 'slope_scan', 'qwp': angle,
           'offsets': list(offsets), 'detectors': [detector.name],
           'motors': [qwp.name, rf.name]}
    _md.update(md or {})

    @subs_decorator([fit, table])
    @run_decorator(md=_md)
    def inner():
        yield from mv(qwp, angle)
        for offset in offsets:
            yield from mv(rf, offset)
            yield from measure([detector, qwp, rf], num=num,
                               filters=_ramsey_filters(detector),
                               max_dropped=max_dropped)

    yield from inner()
    if fit.result is not None:
        logger.info("Slope at %.5f deg is %.4e +/- %.4e G per rf unit",
                    angle, fit.result.params['slope'].value,
                    fit.result.params['slope'].stderr or np.nan)
    return fit, table.frame


def nulling_scan(detector, qwp, rf, angles, offsets, num=1, background=1,
                 max_dropped=10, md=None):
    """
    Measure the background, then one slope scan per plate angle

    Parameters
    ----------
    angles : list
        Plate angles in degrees

    background : int, optional
        Shot sets averaged for the light-off background

    Returns
    -------
    result : dict
        ``background`` as returned by :func:`.measure_background`, ``fits``
        (one :class:`.LinearFit` per angle) and ``tables``
    """
    _md = {'plan_name': 'nulling_background'}
    _md.update(md or {})

    @run_decorator(md=_md)
    def bg():
        return (yield from measure_background(detector, num=background,
                                              max_dropped=max_dropped))

    bkg = yield from bg()
    fits, tables = list(), list()
    for angle in as_list(angles):
        fit, table = yield from slope_scan(detector, qwp, rf, angle, offsets,
                                           num=num, max_dropped=max_dropped,
                                           md=md)
        fits.append(fit)
        tables.append(table)
    return dict(background=bkg, fits=fits, tables=tables)


def delayed_drop_scan(detector, qwp, angles, bias=None, bias_index=0, num=1,
                      background=1, max_dropped=10, md=None):
    """
    Scan the plate of the probe beam for one bias field

    Parameters
    ----------
    detector : DifferentialRamsey

    qwp : WavePlateStage

    angles : list
        Plate angles in degrees

    bias : BiasField, optional
        Moved to ``bias_index`` before the scan

    Returns
    -------
    result : dict
        ``background``, ``fit`` (:class:`.SinusoidFit` of the field
        difference against plate angle) and ``table``
    """
    y = field_prepend('delta_b', detector)
    fit = SinusoidFit(y, qwp.name, degrees=True,
                      yerr=field_prepend('delta_b_err', detector),
                      filters=_ramsey_filters(detector, qwp))
    table = TableCollector()
    motors = [qwp] + ([bias] if bias is not None else [])
    _md = {'plan_name': 'delayed_drop_scan', 'bias_index': bias_index,
           'detectors': [detector.name], 'motors': [m.name for m in motors]}
    _md.update(md or {})

    @run_decorator(md=dict(_md, plan_name='delayed_drop_background'))
    def bg():
        if bias is not None:
            yield from mv(bias, bias_index)
        return (yield from measure_background(detector, num=background,
                                              max_dropped=max_dropped))

    @subs_decorator([fit, table])
    @run_decorator(md=_md)
    def inner():
        for angle in angles:
            yield from mv(qwp, angle)
            yield from measure([detector] + motors, num=num,
                               filters=_ramsey_filters(detector),
                               max_dropped=max_dropped)

    bkg = yield from bg()
    yield from inner()
    return dict(background=bkg, fit=fit, table=table.frame)


def direction_scan(detector, qwp, bias, angle, num=1, background=1,
                   max_dropped=10, md=None):
    """
    Measure the light-induced field difference for every bias field

    The plate is held at ``angle``, normally the angle of full circularity.
    Each bias gets its own light-off background, which keeps the sign of the
    light-induced part

    Returns
    -------
    result : list of dict
        ``index``, ``bias`` (vector in G), ``delta_b`` and ``delta_b_err``
        with the background removed
    """
    _md = {'plan_name': 'direction_scan', 'qwp': angle,
           'detectors': [detector.name], 'motors': [qwp.name, bias.name]}
    _md.update(md or {})
    d_key = field_prepend('delta_b', detector)
    e_key = field_prepend('delta_b_err', detector)

    @run_decorator(md=_md)
    def inner():
        out = list()
        yield from mv(qwp, angle)
        for idx in range(len(bias.biases)):
            yield from mv(bias, idx)
            bkg = yield from measure_background(detector, num=background,
                                                max_dropped=max_dropped)
            data = yield from measure([detector, qwp, bias], num=num,
                                      filters=_ramsey_filters(detector),
                                      max_dropped=max_dropped)
            dB, err = average_reading(data, d_key, e_key)
            out.append(dict(index=idx, bias=bias.biases[idx],
                            delta_b=dB - bkg['delta_b'],
                            delta_b_err=float(np.hypot(err,
                                                       bkg['delta_b_err']))))
            logger.debug("Bias %s gives a light-induced difference %.4e G",
                         idx, out[-1]['delta_b'])
        return out

    return (yield from inner())
