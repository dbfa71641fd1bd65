"""
Gaussian beam traps, gravitational sag and the fictitious field they produce

Positions are 3-vectors in meters with ``y`` pointing up, intensities are in
W/m^2 and magnetic fields are in gauss.
"""
############
# Standard #
############
import logging
from dataclasses import dataclass, field, replace
from collections import namedtuple

###############
# Third Party #
###############
import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

##########
# Module #
##########
from .constants import (C, EPS0, H, MU_B_GAUSS, GRAVITY, WAVELENGTH,
                        RB87_GF1, GAMMA_RB87)
from .polopt import PolarizationState, fictitious_field
from .utils.argutils import as_unit_vector
from .utils.exceptions import TrapUnboundError

logger = logging.getLogger(__name__)

#: Upward unit vector, gravity points along -UP
UP = np.array([0., 1., 0.])


@dataclass(frozen=True)
class GaussianBeam:
    """
    Focused TEM00 beam

    Attributes
    ----------
    power : float
        Beam power in W

    waist : float
        1/e^2 intensity radius at the focus in m

    wavelength : float

    k_hat : tuple
        Propagation direction, normalized on construction

    focus : tuple
        Focus position in m

    polarization : PolarizationState
        State reaching the atoms

    frequency_offset : float
        AOM offset in Hz, carried for bookkeeping only

    label : str
    """
    power: float
    waist: float
    wavelength: float = WAVELENGTH
    k_hat: tuple = (0., 0., 1.)
    focus: tuple = (0., 0., 0.)
    polarization: PolarizationState = field(
                            default_factory=lambda: PolarizationState.linear(0))
    frequency_offset: float = 0.0
    label: str = ''

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("Beam power must be non-negative")
        if not self.waist > 0:
            raise ValueError("Beam waist must be positive")
        object.__setattr__(self, 'k_hat',
                           tuple(as_unit_vector(self.k_hat, 'k_hat')))
        focus = np.asarray(self.focus, dtype=float)
        if focus.shape != (3,):
            raise ValueError("Beam focus must be a 3-vector")
        object.__setattr__(self, 'focus', tuple(focus))

    @property
    def rayleigh_range(self):
        return np.pi * self.waist**2 / self.wavelength

    @property
    def peak_intensity(self):
        return 2 * self.power / (np.pi * self.waist**2)

    def with_power(self, power):
        return replace(self, power=power)

    def with_polarization(self, polarization):
        return replace(self, polarization=polarization)


@dataclass(frozen=True)
class MagneticEnvironment:
    """
    Bias field plus a uniform gradient of its magnitude

    Attributes
    ----------
    b0 : tuple
        Bias field vector in G

    gradient : float
        Gradient of the field magnitude in G/cm

    gradient_axis : tuple
        Direction along which the magnitude changes
    """
    b0: tuple = (0., 1., 0.)
    gradient: float = 0.0
    gradient_axis: tuple = (0., 1., 0.)

    def __post_init__(self):
        object.__setattr__(self, 'b0',
                           tuple(np.asarray(self.b0, dtype=float)))
        object.__setattr__(self, 'gradient_axis',
                           tuple(as_unit_vector(self.gradient_axis,
                                                'gradient_axis')))

    @property
    def b0_magnitude(self):
        return float(np.linalg.norm(self.b0))

    @property
    def b0_hat(self):
        return as_unit_vector(self.b0, 'b0')

    def field_at(self, r):
        """Bias field vector including the gradient term"""
        r = np.asarray(r, dtype=float)
        offset = self.gradient * 100 * (r @ np.asarray(self.gradient_axis))
        return np.asarray(self.b0) + np.multiply.outer(offset, self.b0_hat)


@dataclass(frozen=True)
class TrapSite:
    """
    Local conditions at one condensate position
    """
    position: np.ndarray
    intensities: tuple
    total_intensity: float
    b_vls: np.ndarray


def intensity_at(beam, r):
    """
    Intensity of a Gaussian beam including the Rayleigh divergence

    Parameters
    ----------
    beam : GaussianBeam

    r : array-like
        Position or array of positions, shape ``(..., 3)``

    Returns
    -------
    intensity : float or np.ndarray
        W/m^2
    """
    d = np.asarray(r, dtype=float) - np.asarray(beam.focus)
    k = np.asarray(beam.k_hat)
    z = d @ k
    rho2 = np.sum(d**2, axis=-1) - z**2
    w2 = beam.waist**2 * (1 + (z / beam.rayleigh_range)**2)
    return 2 * beam.power / (np.pi * w2) * np.exp(-2 * rho2 / w2)


def total_intensity(beams, r):
    """Incoherent sum of beam intensities"""
    return sum(intensity_at(beam, r) for beam in beams)


def dipole_potential(beams, alpha_scalar, r):
    """
    Scalar light shift potential ``-alpha I / (2 c eps0)`` in J
    """
    alpha = getattr(alpha_scalar, 'value', alpha_scalar)
    return -alpha * total_intensity(beams, r) / (2 * C * EPS0)


def potential_depth(beams, alpha_scalar, r=None):
    """
    Depth of the dipole potential in units of h x Hz, ignoring gravity
    """
    if r is None:
        r = beams[0].focus
    return -dipole_potential(beams, alpha_scalar, r) / H


def _vertical_profile(beams, alpha_scalar, mass, g, origin):
    def potential(y):
        return (dipole_potential(beams, alpha_scalar, origin + y * UP)
                + mass * g * y)
    return potential


def trap_minimum(beams, alpha_scalar, mass, g=GRAVITY, origin=None,
                 xatol=1e-10):
    """
    Position of the trap minimum along the vertical through ``origin``

    Parameters
    ----------
    beams : list of GaussianBeam

    alpha_scalar : Polarizability or float

    mass : float
        Atomic mass in kg

    g : float, optional
        Gravitational acceleration, gravity pulls along -y

    origin : array-like, optional
        Point on the search line, defaults to the focus of the first beam

    Returns
    -------
    position : np.ndarray
    """
    origin = np.asarray(origin if origin is not None else beams[0].focus,
                        dtype=float)
    span = 2 * max(beam.waist for beam in beams)
    potential = _vertical_profile(beams, alpha_scalar, mass, g, origin)
    grid = np.linspace(-span, span, 801)
    values = np.array([potential(y) for y in grid])
    interior = np.where((values[1:-1] < values[:-2])
                        & (values[1:-1] <= values[2:]))[0] + 1
    if not len(interior):
        logger.error("No bound minimum within %.1f um of the beam axis",
                     span * 1e6)
        raise TrapUnboundError("The beams cannot support the atoms "
                               "against gravity")
    best = interior[np.argmin(values[interior])]
    res = minimize_scalar(potential, bounds=(grid[best-1], grid[best+1]),
                          method='bounded', options={'xatol': xatol})
    logger.debug("Trap minimum found %.4f um below the origin",
                 -res.x * 1e6)
    return origin + res.x * UP


def trap_frequencies(beams, alpha_scalar, mass, position, step=None):
    """
    Harmonic trap frequencies from the curvature of the dipole potential

    Parameters
    ----------
    position : array-like
        Usually the output of :func:`trap_minimum`

    step : float, optional
        Finite difference step, defaults to 1 % of the smallest waist

    Returns
    -------
    omegas : np.ndarray
        Angular frequencies in rad/s, ascending, NaN for non-confining axes

    axes : np.ndarray
        Principal axes as columns
    """
    position = np.asarray(position, dtype=float)
    step = step or 0.01 * min(beam.waist for beam in beams)

    def u(r):
        return dipole_potential(beams, alpha_scalar, r)

    eye = np.eye(3) * step
    hess = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            hess[i, j] = (u(position + eye[i] + eye[j])
                          - u(position + eye[i] - eye[j])
                          - u(position - eye[i] + eye[j])
                          + u(position - eye[i] - eye[j])) / (4 * step**2)
    curv, axes = np.linalg.eigh(0.5 * (hess + hess.T))
    if np.any(curv <= 0):
        logger.warning("Potential is not confining along every axis")
    with np.errstate(invalid='ignore'):
        omegas = np.where(curv > 0, np.sqrt(np.abs(curv) / mass), np.nan)
    return omegas, axes


class VLSFieldMap:
    """
    Vector sum of the fictitious fields of a set of beams

    Parameters
    ----------
    beams : list of GaussianBeam

    alpha_v : Polarizability or float

    g_f : float, optional

    f : float, optional
    """
    def __init__(self, beams, alpha_v, g_f=RB87_GF1, f=1):
        self.beams = list(beams)
        self.alpha_v = alpha_v
        self.g_f = g_f
        self.f = f

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        total = np.zeros(r.shape)
        for beam in self.beams:
            total = total + fictitious_field(intensity_at(beam, r),
                                             beam.polarization, beam.k_hat,
                                             self.alpha_v, self.g_f, self.f)
        return total

    def magnitude(self, r, env=None):
        """|B_vls| or, with a bias environment, |B0 + B_vls|"""
        b = self(r)
        if env is not None:
            b = b + env.field_at(r)
        return np.linalg.norm(b, axis=-1)

    def gradient(self, r, direction=UP, step=1e-7, env=None):
        """
        Central difference of the field magnitude along ``direction``

        Returns
        -------
        gradient : float
            G/m
        """
        r = np.asarray(r, dtype=float)
        d = as_unit_vector(direction, 'direction') * step
        return (self.magnitude(r + d, env=env)
                - self.magnitude(r - d, env=env)) / (2 * step)

    def site(self, r):
        r = np.asarray(r, dtype=float)
        intensities = tuple(float(intensity_at(b, r)) for b in self.beams)
        return TrapSite(position=r, intensities=intensities,
                        total_intensity=float(sum(intensities)),
                        b_vls=self(r))


def vls_field_map(beams, alpha_v, g_f=RB87_GF1, f=1):
    """
    Field map callable ``r -> B_vls(r)`` in gauss
    """
    return VLSFieldMap(beams, alpha_v, g_f=g_f, f=f)


def field_map_table(field_map, points, env=None):
    """
    Tabulate a field map on a set of positions

    Parameters
    ----------
    field_map : VLSFieldMap

    points : array-like
        Shape ``(n, 3)``

    env : MagneticEnvironment, optional
        Add the bias field before tabulating

    Returns
    -------
    table : pandas.DataFrame
        Columns ``x, y, z, Bx, By, Bz, B``
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    b = field_map(points)
    if env is not None:
        b = b + env.field_at(points)
    table = pd.DataFrame(points, columns=['x', 'y', 'z'])
    table['Bx'], table['By'], table['Bz'] = b[:, 0], b[:, 1], b[:, 2]
    table['B'] = np.linalg.norm(b, axis=1)
    return table


def grid_points(x, y, z):
    """Cartesian product of three coordinate arrays as an (n, 3) array"""
    mesh = np.meshgrid(np.atleast_1d(x), np.atleast_1d(y), np.atleast_1d(z),
                       indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=1)


ZeemanShift = namedtuple('ZeemanShift', ['exact', 'first_order', 'b_vls'])


def vls_zeeman_shift(i0, theta, nu, m_f, f, alpha_v, g_f=RB87_GF1, b0=1.0):
    """
    Zeeman energy shift caused by the vector light shift

    Parameters
    ----------
    i0 : float
        Intensity in W/m^2

    theta : float
        Ellipticity angle, ``C = sin(2 theta)``

    nu : float
        Angle between the bias field and the beam wavevector

    m_f, f : float

    alpha_v : Polarizability or float

    g_f : float, optional

    b0 : float, optional
        Bias field magnitude in G, used by the exact form

    Returns
    -------
    shift : ZeemanShift
        ``exact`` and ``first_order`` shifts in Hz, and the signed fictitious
        field along the wavevector in G
    """
    alpha = getattr(alpha_v, 'value', alpha_v)
    circ = np.sin(2 * theta)
    b_vls = -circ * i0 * alpha / (4 * C * EPS0 * MU_B_GAUSS * g_f * f)
    if b0 <= 0:
        raise ValueError("The exact shift needs a positive bias field")
    total = np.sqrt(b0**2 + 2 * b0 * b_vls * np.cos(nu) + b_vls**2)
    # (|B0+Bv| - B0) without cancellation
    delta = (b_vls**2 + 2 * b0 * b_vls * np.cos(nu)) / (total + b0)
    exact = MU_B_GAUSS * g_f * m_f * delta / H
    first = -i0 * alpha / (4 * C * EPS0) * circ * np.cos(nu) * m_f / f / H
    return ZeemanShift(exact=exact, first_order=first, b_vls=b_vls)


def dephasing_time(r_tf, gradient, gamma=GAMMA_RB87):
    """
    Longest useful interrogation time in an ambient gradient

    ``T = 2 pi / (2 r_TF gamma B')``

    Parameters
    ----------
    r_tf : float
        Thomas-Fermi radius in m

    gradient : float
        Field gradient in G/cm

    gamma : float, optional
        Gyromagnetic ratio in rad/s/G

    Returns
    -------
    time : float
        Seconds, ``inf`` for a vanishing gradient
    """
    gradient = abs(gradient) * 100
    if gradient == 0:
        return np.inf
    return 2 * np.pi / (2 * r_tf * gamma * gradient)
