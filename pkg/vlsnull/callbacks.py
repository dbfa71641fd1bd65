"""
Live fits of the field difference as scans progress

Every fit subclasses :class:`LiveBuild`, a bluesky ``LiveFit`` that screens
events, averages repeated readings into one point and weights the fit by the
reported uncertainty of the field difference.
"""
############
# Standard #
############
import logging

###############
# Third Party #
###############
import lmfit
import pandas as pd
import numpy as np
from lmfit.models import LinearModel
from bluesky.callbacks import LiveFit, CallbackBase

logger = logging.getLogger(__name__)


def _unusable(value):
    """NaN or infinite readings, including the strings 'nan' and 'inf'"""
    if isinstance(value, str):
        return value.strip().lower() in ('nan', 'inf', '-inf')
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        return False
    return not np.all(np.isfinite(arr))


def apply_filters(doc, filters=None, drop_missing=True):
    """
    Decide whether an event's data passes every filter

    Parameters
    ----------
    doc : dict
        ``data`` of an event document

    filters : dict, optional
        Event key to a predicate taking the reading

    drop_missing : bool, optional
        Reject events where a filtered key is absent or its reading is NaN or
        infinite. Otherwise such keys pass without calling the predicate

    Returns
    -------
    passed : bool

    Example
    -------
    ..code::

        apply_filters(doc['data'], filters={'ramsey_delta_b': finite,
                                            'qwp': lambda x: 0 <= x < 360})
    """
    for key, func in (filters or dict()).items():
        if key not in doc or _unusable(doc[key]):
            if drop_missing:
                return False
            continue
        try:
            if not func(doc[key]):
                return False
        except Exception as exc:
            logger.critical("Filter on %s raised %r, dropping the event",
                            key, exc)
            return False
    return True


def finite(value):
    """Filter accepting any finite reading"""
    return bool(np.all(np.isfinite(value)))


class LiveBuild(LiveFit):
    """
    Filtered, averaged and optionally weighted live fit

    Parameters
    ----------
    model : lmfit.Model

    y : str
        Event key of the dependent variable

    independent_vars : dict
        Model argument name to event key

    init_guess : dict, optional
        Starting parameter values

    update_every : int or None, optional
        Refit after this many points, or only when the run stops if None

    filters : dict, optional
        Key, callable pairs applied to every event before it reaches the fit

    drop_missing : bool, optional
        See :func:`apply_filters`

    average : int, optional
        Number of events averaged into each fitted point

    yerr : str, optional
        Key of the one sigma uncertainty of ``y``. When given, the fit is
        weighted by the inverse of the uncertainty
    """
    def __init__(self, model, y, independent_vars, init_guess=None,
                 update_every=1, filters=None, drop_missing=True,
                 average=1, yerr=None):
        super().__init__(model, y, independent_vars, init_guess=init_guess,
                         update_every=update_every)
        self.filters = dict(filters or {})
        self.drop_missing = drop_missing
        self.average = average
        self.yerr = yerr
        self.yerr_data = list()
        self._pending = list()

    @property
    def name(self):
        return self.model.name

    @property
    def field_names(self):
        """Event keys averaged into each point"""
        return [self.y] + list(self.independent_vars.values())

    def start(self, doc):
        self.yerr_data.clear()
        self._pending.clear()
        super().start(doc)

    def event(self, doc):
        if not apply_filters(doc['data'], filters=self.filters,
                             drop_missing=self.drop_missing):
            logger.debug("Model %s dropped event %s", self.name,
                         doc.get('seq_num'))
            return
        self._pending.append(doc['data'])
        if len(self._pending) < self.average:
            return
        data = dict(doc['data'])
        for key in self.field_names:
            data[key] = np.mean([d[key] for d in self._pending])
        if self.yerr:
            # Standard error of the mean of independent readings
            errs = [d.get(self.yerr, np.nan) for d in self._pending]
            self.yerr_data.append(np.sqrt(np.sum(np.square(errs)))
                                  / len(errs))
        self._pending.clear()
        super().event(dict(doc, data=data, seq_num=len(self.ydata) + 1))

    @property
    def weights(self):
        """
        Inverse uncertainties of the fitted points, None when unweighted
        """
        if not self.yerr or len(self.yerr_data) != len(self.ydata):
            return None
        errs = np.asarray(self.yerr_data, dtype=float)
        if not np.all(np.isfinite(errs)) or np.any(errs <= 0):
            logger.warning("Degenerate uncertainties for model %s, "
                           "falling back to an unweighted fit", self.name)
            return None
        return 1 / errs

    def update_fit(self):
        needed = len(self.model.param_names)
        if len(self.ydata) < needed:
            logger.warning("LiveBuild %s cannot update the fit until at "
                           "least %s points are collected", self.name, needed)
            return
        kwargs = {k: np.asarray(v, dtype=float)
                  for k, v in self.independent_vars_data.items()}
        kwargs.update(self.init_guess)
        weights = self.weights
        if weights is not None:
            kwargs['weights'] = weights
        self.result = self.model.fit(np.asarray(self.ydata, dtype=float),
                                     **kwargs)

    def _require_result(self, action):
        if not self.result:
            raise RuntimeError("Model {} has no fit to {} yet, run a scan or "
                               "call update_fit".format(self.name, action))


class LinearFit(LiveBuild):
    """
    Straight line through the field difference against one axis

    Parameters
    ----------
    y : str
        Event key of the field difference

    x : str
        Event key of the scanned axis

    init_guess : dict, optional
        ``slope`` and ``intercept``, zero by default

    name : str, optional
        Name of the lmfit model

    update_every, average, yerr, filters :
        See :class:`LiveBuild`
    """
    def __init__(self, y, x, init_guess=None, update_every=1, name=None,
                 average=1, yerr=None, filters=None):
        init = dict(slope=0., intercept=0.)
        init.update(init_guess or {})
        super().__init__(LinearModel(nan_policy='omit', name=name), y,
                         {'x': x}, init_guess=init,
                         update_every=update_every, average=average,
                         yerr=yerr, filters=filters)


def sinusoid(x, amplitude=1., theta_n=0., offset=0.):
    """``amplitude * sin(2 (x - theta_n)) + offset`` with ``x`` in radians"""
    return amplitude * np.sin(2 * (x - theta_n)) + offset


def sinusoid_guess(x, y):
    """
    Linear least squares starting point for :func:`sinusoid`

    Returns
    -------
    guess : dict
        ``amplitude`` (non-negative), ``theta_n`` and ``offset``
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    design = np.column_stack([np.sin(2*x), np.cos(2*x), np.ones_like(x)])
    (a, b, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    return {'amplitude': float(np.hypot(a, b)),
            'theta_n': float(-0.5 * np.arctan2(b, a)),
            'offset': float(c)}


class SinusoidFit(LiveBuild):
    """
    Model the field difference as a function of quarter-wave plate angle

    ``y = amplitude * sin(2 (x - theta_n)) + offset``

    Parameters
    ----------
    y : str
        Keyword in the event document that reports the dependent variable

    x : str
        Keyword in the event document that reports the plate angle

    degrees : bool, optional
        The plate angle is reported in degrees. Fitted ``theta_n`` is always
        in the units of ``x``

    name : str, optional

    update_every : int or None, optional
    """
    def __init__(self, y, x, degrees=True, init_guess=None, update_every=None,
                 name=None, average=1, yerr=None, filters=None):
        self.degrees = degrees
        self._scale = np.pi / 180 if degrees else 1.

        def sinusoid_model(x, amplitude, theta_n, offset):
            return sinusoid(self._scale * x, amplitude,
                            self._scale * theta_n, offset)

        model = lmfit.Model(sinusoid_model, independent_vars=['x'],
                            nan_policy='omit', name=name)
        init = {'amplitude': 1., 'theta_n': 0., 'offset': 0.}
        if init_guess:
            init.update(init_guess)
        super().__init__(model, y, {'x': x}, init_guess=init,
                         update_every=update_every, average=average,
                         yerr=yerr, filters=filters)

    def update_fit(self):
        if len(self.ydata) >= len(self.model.param_names):
            guess = sinusoid_guess(self._scale
                                   * np.asarray(self.independent_vars_data['x'],
                                                dtype=float),
                                   self.ydata)
            guess['theta_n'] /= self._scale
            self.init_guess.update(guess)
        super().update_fit()

    @property
    def params(self):
        """
        Fitted parameters with a non-negative amplitude and ``theta_n``
        wrapped onto one half period
        """
        self._require_result('report')
        vals = dict(self.result.values)
        half = np.pi / 2 / self._scale
        if vals['amplitude'] < 0:
            vals['amplitude'] *= -1
            vals['theta_n'] += half
        vals['theta_n'] = float(np.mod(vals['theta_n'], 2 * half))
        return vals

    def backsolve(self, target):
        """
        Plate angle closest to ``theta_n`` that produces ``target``
        """
        self._require_result('backsolve')
        vals = self.params
        if vals['amplitude'] == 0:
            raise ValueError("Unable to backsolve a flat sinusoid")
        ratio = (target - vals['offset']) / vals['amplitude']
        if abs(ratio) > 1:
            raise ValueError("Target {} is outside the fitted range"
                             "".format(target))
        return {'x': vals['theta_n'] + 0.5 * np.arcsin(ratio) / self._scale}


class TableCollector(CallbackBase):
    """
    Gather the data of every event into a :class:`pandas.DataFrame`

    Parameters
    ----------
    fields : list, optional
        Keys to keep, all keys by default
    """
    def __init__(self, fields=None):
        super().__init__()
        self.fields = fields
        self.rows = list()

    def start(self, doc):
        self.rows.clear()
        super().start(doc)

    def event(self, doc):
        data = doc['data']
        if self.fields:
            data = dict((key, data.get(key, np.nan)) for key in self.fields)
        self.rows.append(dict(data, seq_num=doc.get('seq_num')))
        super().event(doc)

    @property
    def frame(self):
        return pd.DataFrame(self.rows)
