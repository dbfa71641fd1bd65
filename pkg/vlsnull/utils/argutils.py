"""
Small argument helpers shared by the plans and the geometry code
"""
import logging
from collections.abc import Iterable

import numpy as np
from ophyd import Signal, Device

logger = logging.getLogger(__name__)


def isiterable(obj):
    """True for iterables other than strings"""
    return isinstance(obj, Iterable) and not isinstance(obj, str)


def as_list(obj, tp=None):
    """
    Wrap a scalar, or copy an iterable, into a list

    Parameters
    ----------
    obj : object
        ``None`` gives an empty list

    tp : type, optional
        Applied to every element
    """
    if obj is None:
        items = list()
    elif isiterable(obj):
        items = list(obj)
    else:
        items = [obj]
    if tp is not None:
        items = [tp(item) for item in items]
    return items


def as_unit_vector(vec, name='vector'):
    """
    Normalize a 3-vector

    Parameters
    ----------
    vec : array-like
        Three components

    name : str, optional
        Used in the error message

    Returns
    -------
    unit : np.ndarray
    """
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (3,):
        raise ValueError("{} must have three components, "
                         "got shape {}".format(name, vec.shape))
    norm = np.linalg.norm(vec)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("{} must have a finite non-zero length".format(name))
    return vec / norm


def field_prepend(field, obj):
    """
    Event key of ``field`` as read from ``obj``

    Device components are reported as ``<device name>_<field>``, a bare
    Signal reports under its own name
    """
    if isinstance(obj, Signal):
        return obj.name
    if isinstance(obj, Device) and not field.startswith(obj.name + '_'):
        return '{}_{}'.format(obj.name, field)
    return field
