"""
Forward models of the two measurement geometries

Each apparatus turns instrument settings (plate angle, rf power offset, bias
selection, dipole light on or off) into the magnetic field difference seen by
the two condensates. The detector in :mod:`vlsnull.sim.detector` converts that
difference into Ramsey shots.
"""
############
# Standard #
############
import logging

###############
# Third Party #
###############
import numpy as np

##########
# Module #
##########
from ..constants import C, EPS0, MU_B_GAUSS, RB87_GF1
from ..polopt import (circularity_after_cell, nulling_angle,
                      state_from_theta_phi)
from ..trapfield import VLSFieldMap

logger = logging.getLogger(__name__)


def field_per_intensity(alpha_v, g_f=RB87_GF1, f=1):
    """
    Magnitude of the fictitious field per unit intensity at full circularity

    Returns
    -------
    kappa : float
        G per W/m^2
    """
    alpha = getattr(alpha_v, 'value', alpha_v)
    return abs(alpha / (4 * C * EPS0 * MU_B_GAUSS * g_f * f))


class InTrapApparatus:
    """
    Two condensates held in beams A and B that share one quarter-wave plate

    Parameters
    ----------
    alpha_v : Polarizability or float

    p_a, p_b : float
        Intensity at each condensate per rf unit, W/m^2

    power_a, power_b : float
        Nominal rf powers

    theta_n : float
        Plate angle in degrees at which the light reaching the atoms is
        linear. The plate mount offset is chosen to put the null there

    cell_retardance : float
        Window retardance in rad

    cell_axis : float
        Window slow axis in rad

    beam_b_offset : float
        Extra plate angle in degrees seen by beam B only

    separation : float
        Distance between the condensates in m

    gradient : float
        Ambient gradient of the field magnitude in G/cm

    beam_c : dict, optional
        ``delta_intensity`` (W/m^2 between the sites), ``qwp`` (deg, plate
        angle relative to its own null) and ``misalignment`` (rad between the
        bias and the normal to beam C)

    g_f, f : float
    """
    def __init__(self, alpha_v, p_a, p_b, power_a=1., power_b=1.,
                 theta_n=0., cell_retardance=0., cell_axis=0.,
                 beam_b_offset=0., separation=54.1e-6, gradient=0.,
                 beam_c=None, g_f=RB87_GF1, f=1):
        self.kappa = field_per_intensity(alpha_v, g_f=g_f, f=f)
        self.sign = -np.sign(getattr(alpha_v, 'value', alpha_v) * g_f)
        self.p_a, self.p_b = p_a, p_b
        self.power_a, self.power_b = power_a, power_b
        self.theta_n = theta_n
        self.cell_retardance = cell_retardance
        self.cell_axis = cell_axis
        self.beam_b_offset = beam_b_offset
        self.separation = separation
        self.gradient = gradient
        self.beam_c = dict(delta_intensity=0., qwp=0., misalignment=0.)
        self.beam_c.update(beam_c or {})
        #Mount offset so that the circularity vanishes at theta_n
        self.mount_offset = (np.deg2rad(theta_n)
                             - nulling_angle(cell_retardance, cell_axis))

    @property
    def offset0(self):
        """rf power offset of beam A that balances the intensities"""
        return self.p_b / self.p_a * self.power_b - self.power_a

    def circularity(self, qwp):
        """Circularity reaching the atoms for a plate angle in degrees"""
        return circularity_after_cell(np.deg2rad(qwp) - self.mount_offset,
                                      self.cell_retardance, self.cell_axis)

    def intensities(self, offset):
        """
        Intensities at the two condensates for a balanced offset ``offset``
        """
        i_a = self.p_a * (self.power_a + self.offset0 + offset)
        i_b = self.p_b * self.power_b
        if i_a < 0 or i_b < 0:
            raise ValueError("rf offset {} gives a negative intensity"
                             "".format(offset))
        return i_a, i_b

    @property
    def background(self):
        """Field difference from the ambient gradient in G"""
        return self.gradient * self.separation * 100

    def beam_c_difference(self):
        c = self.beam_c
        circ = np.sin(2 * np.deg2rad(c['qwp']))
        return (self.sign * self.kappa * circ * c['delta_intensity']
                * np.sin(c['misalignment']))

    def field_difference(self, qwp=None, offset=0., light=True):
        """
        Field difference between condensate A and condensate B in G

        Parameters
        ----------
        qwp : float
            Plate angle in degrees

        offset : float
            rf power offset relative to balance

        light : bool
            Whether the dipole light is on during the interrogation
        """
        if not light:
            return self.background
        i_a, i_b = self.intensities(offset)
        c_a = self.circularity(qwp)
        c_b = self.circularity(qwp + self.beam_b_offset)
        vls = self.sign * self.kappa * (c_a * i_a - c_b * i_b)
        return self.background + vls + self.beam_c_difference()

    def expected_phase(self, t, gamma):
        """Ramsey phase of the background alone"""
        return gamma * self.background * t


class DelayedDropApparatus:
    """
    Two condensates released at different times into a single beam C

    Parameters
    ----------
    beam : GaussianBeam
        Beam C. Its polarization is ignored, the circularity is set by the
        plate angle

    alpha_v : Polarizability or float

    positions : tuple
        Positions of condensates A and B during the interrogation in m

    biases : list
        Bias field vectors in G, selected by index

    background : float
        Field magnitude difference between the sites without light, in G

    theta_n : float
        Plate angle in degrees at which the light is linear

    cell_retardance, cell_axis : float

    g_f, f : float
    """
    def __init__(self, beam, alpha_v, positions, biases, background=0.,
                 theta_n=0., cell_retardance=0., cell_axis=0.,
                 g_f=RB87_GF1, f=1):
        self.beam = beam
        self.alpha_v = alpha_v
        self.positions = [np.asarray(p, dtype=float) for p in positions]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.background = background
        self.theta_n = theta_n
        self.cell_retardance = cell_retardance
        self.cell_axis = cell_axis
        self.g_f, self.f = g_f, f
        self.mount_offset = (np.deg2rad(theta_n)
                             - nulling_angle(cell_retardance, cell_axis))

    @property
    def separation(self):
        return float(np.linalg.norm(self.positions[0] - self.positions[1]))

    def circularity(self, qwp):
        return circularity_after_cell(np.deg2rad(qwp) - self.mount_offset,
                                      self.cell_retardance, self.cell_axis)

    def field_map(self, qwp):
        """Fictitious field map of beam C at a plate angle"""
        theta = 0.5 * np.arcsin(np.clip(self.circularity(qwp), -1, 1))
        state = state_from_theta_phi(theta, 0.)
        return VLSFieldMap([self.beam.with_polarization(state)],
                           self.alpha_v, g_f=self.g_f, f=self.f)

    def vls_difference(self, qwp):
        """Vector difference of the fictitious fields, A minus B, in G"""
        fmap = self.field_map(qwp)
        return fmap(self.positions[0]) - fmap(self.positions[1])

    def field_difference(self, qwp=None, bias=0, light=True):
        """
        Difference of the total field magnitudes, A minus B, in G
        """
        if not light:
            return self.background
        b0 = self.biases[int(round(bias))]
        fmap = self.field_map(qwp)
        mag_a = np.linalg.norm(b0 + fmap(self.positions[0]))
        mag_b = np.linalg.norm(b0 + fmap(self.positions[1]))
        return self.background + mag_a - mag_b
