"""
Simulated differential Ramsey readout
"""
############
# Standard #
############
import logging
from collections import Counter
from dataclasses import replace

###############
# Third Party #
###############
import numpy as np
from ophyd import Device, Component as Cpt
from ophyd.signal import Signal
from ophyd.status import DeviceStatus

##########
# Module #
##########
from ..ramsey import simulate_shots, ellipse_fit, unfold_phase
from ..utils.exceptions import DegenerateFitError

logger = logging.getLogger(__name__)


class DifferentialRamsey(Device):
    """
    Pair of condensates read out by differential Ramsey interferometry

    Every trigger evaluates the apparatus at the current motor positions,
    simulates one set of shots, reduces them with an ellipse fit and unfolds
    the folded phase against ``reference``.

    Parameters
    ----------
    apparatus : InTrapApparatus or DelayedDropApparatus
        Forward model providing ``field_difference(light=..., **positions)``

    motors : dict
        Maps keyword arguments of ``field_difference`` to positioners

    config : RamseyConfig
        Template for every shot set. ``delta_b`` and ``seed`` are replaced

    seed : int, optional
        Root seed

    stage : str, optional
        Prefix of the random substream names
    """
    phase = Cpt(Signal, value=np.nan, kind='hinted')
    phase_err = Cpt(Signal, value=np.nan)
    folded_phase = Cpt(Signal, value=np.nan)
    delta_b = Cpt(Signal, value=np.nan, kind='hinted')
    delta_b_err = Cpt(Signal, value=np.nan)
    ambiguous = Cpt(Signal, value=False)
    light = Cpt(Signal, value=True, kind='config')
    reference = Cpt(Signal, value=np.nan, kind='config')

    def __init__(self, apparatus, motors, config, *, seed=0,
                 stage='ramsey.shots', name='ramsey', **kwargs):
        super().__init__(name=name, **kwargs)
        self.apparatus = apparatus
        self.motors = dict(motors)
        self.config = config
        self.seed = seed
        self.stage = stage
        self._repeats = Counter()

    def settings(self):
        return {key: float(motor.position)
                for key, motor in sorted(self.motors.items())}

    def _stage_name(self, settings, light):
        fields = ':'.join('{}={:.9f}'.format(k, v)
                          for k, v in settings.items())
        return '{}:{}:{}'.format(self.stage, fields,
                                 'light' if light else 'dark')

    def true_field(self):
        """Field difference of the forward model at the current settings"""
        return self.apparatus.field_difference(light=bool(self.light.get()),
                                               **self.settings())

    def acquire(self):
        """
        Simulate and reduce one shot set

        Returns
        -------
        reading : dict
            Values of the published signals
        """
        settings = self.settings()
        light = bool(self.light.get())
        dB = self.apparatus.field_difference(light=light, **settings)
        cfg = replace(self.config, delta_b=float(dB), seed=self.seed)
        stage = self._stage_name(settings, light)
        repeat = self._repeats[stage]
        self._repeats[stage] += 1
        shots = simulate_shots(cfg, repeat, stage=stage)
        scale = cfg.gamma * cfg.t
        try:
            fit = ellipse_fit(shots)
        except DegenerateFitError as err:
            logger.warning("Dropping shot set at %s: %s", settings, err)
            return dict(phase=np.nan, phase_err=np.nan, folded_phase=np.nan,
                        delta_b=np.nan, delta_b_err=np.nan, ambiguous=True)
        reference = self.reference.get()
        if np.isfinite(reference):
            phase, ambiguous = unfold_phase(fit.delta_phi, reference)
        else:
            phase, ambiguous = fit.delta_phi, False
        logger.debug("Folded phase %.6f unfolded to %.6f at %s",
                     fit.delta_phi, phase, settings)
        return dict(phase=phase, phase_err=fit.uncertainty,
                    folded_phase=fit.delta_phi, delta_b=phase / scale,
                    delta_b_err=fit.uncertainty / scale, ambiguous=ambiguous)

    def trigger(self):
        for key, value in self.acquire().items():
            getattr(self, key).put(value)
        status = DeviceStatus(self)
        status.set_finished()
        return status

    def reset(self):
        """Forget how often each setting has been measured"""
        self._repeats.clear()
