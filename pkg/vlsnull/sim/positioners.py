"""
Simulated axes standing in for the motion and rf controls
"""
import logging

import numpy as np
from ophyd.sim import SynAxis
from ophyd.utils import LimitError

logger = logging.getLogger(__name__)


class WavePlateStage(SynAxis):
    """
    Rotation mount of a quarter-wave plate, in degrees

    Parameters
    ----------
    resolution : float, optional
        Step of the rotation stage in rad. Requested positions are rounded to
        the nearest step. None disables quantization
    """
    def __init__(self, *, name, resolution=None, value=0., **kwargs):
        self.resolution = resolution
        super().__init__(name=name, value=value, **kwargs)

    def quantize(self, position):
        if not self.resolution:
            return position
        step = np.rad2deg(self.resolution)
        return float(np.round(position / step) * step)

    def set(self, value):
        target = self.quantize(value)
        if target != value:
            logger.debug("%s rounds %.6f deg to %.6f deg", self.name,
                         value, target)
        return super().set(target)


class RfPowerOffset(SynAxis):
    """
    rf power offset applied to beam A relative to the balanced setting

    Parameters
    ----------
    limits : tuple, optional
        Lowest and highest allowed offset
    """
    def __init__(self, *, name, limits=None, value=0., **kwargs):
        self._limits = limits
        super().__init__(name=name, value=value, **kwargs)

    @property
    def limits(self):
        return self._limits or (-np.inf, np.inf)

    def set(self, value):
        low, high = self.limits
        if not low <= value <= high:
            raise LimitError("rf offset {} is outside {}".format(value,
                                                                 self.limits))
        return super().set(value)


class BiasField(SynAxis):
    """
    Selects one of a configured set of bias field vectors by index

    Parameters
    ----------
    biases : list
        Bias field vectors in G
    """
    def __init__(self, biases, *, name, value=0, **kwargs):
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        super().__init__(name=name, value=value, **kwargs)

    def set(self, value):
        if not 0 <= int(round(value)) < len(self.biases):
            raise LimitError("No bias field with index {}".format(value))
        return super().set(int(round(value)))

    @property
    def vector(self):
        return self.biases[int(round(self.position))]
