"""
Jones calculus for the trapping beams

Conventions
-----------
Circular unit vectors are ``e_L = (x + iy)/sqrt(2)`` and
``e_R = (x - iy)/sqrt(2)`` so that the circularity

    C = |E_L|^2 - |E_R|^2 = 2 Im(E_x* E_y)

is +1 for left circular light. A :class:`Retarder` multiplies the field
component along its fast axis by ``exp(i delta)`` relative to the orthogonal
component, which makes a quarter-wave plate with its fast axis at ``theta``
turn horizontal light into a state of circularity ``sin(2 theta)``.
"""
############
# Standard #
############
import logging
from dataclasses import dataclass

###############
# Third Party #
###############
import numpy as np
from scipy.optimize import bisect, brentq

##########
# Module #
##########
from .constants import C, EPS0, MU_B_GAUSS
from .utils.argutils import as_unit_vector
from .utils.exceptions import NoRootError

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2)


@dataclass(frozen=True)
class PolarizationState:
    """
    Fully polarized transverse field stored as circular amplitudes

    Attributes
    ----------
    left : complex
        Amplitude on the left circular unit vector

    right : complex
        Amplitude on the right circular unit vector
    """
    left: complex
    right: complex

    def __post_init__(self):
        norm = abs(self.left)**2 + abs(self.right)**2
        if not np.isclose(norm, 1, rtol=0, atol=1e-9):
            raise ValueError("Polarization state is not normalized, "
                             "|E|^2 = {}".format(norm))

    @classmethod
    def from_jones(cls, ex, ey, normalize=True):
        """
        Build a state from linear Jones components
        """
        ex, ey = complex(ex), complex(ey)
        if normalize:
            norm = np.sqrt(abs(ex)**2 + abs(ey)**2)
            if norm == 0:
                raise ValueError("Zero field has no polarization")
            ex, ey = ex / norm, ey / norm
        return cls(left=(ex - 1j*ey) / SQRT2, right=(ex + 1j*ey) / SQRT2)

    @classmethod
    def linear(cls, angle):
        """Linear polarization at ``angle`` from the x axis"""
        return cls.from_jones(np.cos(angle), np.sin(angle))

    @property
    def jones(self):
        """Linear Jones vector (E_x, E_y)"""
        return np.array([(self.left + self.right) / SQRT2,
                         1j*(self.left - self.right) / SQRT2])

    @property
    def circularity(self):
        """Normalized Stokes parameter S3/S0"""
        return float(abs(self.left)**2 - abs(self.right)**2)

    @property
    def theta(self):
        """Ellipticity angle, ``C = sin(2 theta)``"""
        return 0.5 * np.arcsin(np.clip(self.circularity, -1, 1))

    @property
    def phi(self):
        """Orientation of the polarization ellipse modulo pi"""
        if abs(self.left) < 1e-15 or abs(self.right) < 1e-15:
            return 0.0
        return float(np.mod(0.5 * np.angle(self.right * np.conj(self.left)),
                            np.pi))


def state_from_theta_phi(theta, phi):
    """
    Elliptical state parametrized by ellipticity and orientation

    ``E = sin(theta + pi/4) e_L + exp(2 i phi) cos(theta + pi/4) e_R``

    Parameters
    ----------
    theta : float
        Ellipticity angle in radians

    phi : float
        Orientation angle in radians

    Returns
    -------
    state : PolarizationState
    """
    return PolarizationState(left=complex(np.sin(theta + np.pi/4)),
                             right=complex(np.exp(2j*phi)
                                           * np.cos(theta + np.pi/4)))


def circularity(state):
    return state.circularity


@dataclass(frozen=True)
class Retarder:
    """
    Ideal linear retarder

    Attributes
    ----------
    retardance : float
        Phase of the fast-axis component relative to the slow axis (rad)

    fast_axis : float
        Fast-axis angle from the x axis (rad)

    kind : str
        ``'qwp'``, ``'hwp'`` or ``'window'``
    """
    retardance: float
    fast_axis: float = 0.0
    kind: str = 'window'

    @classmethod
    def qwp(cls, fast_axis):
        return cls(np.pi/2, fast_axis, kind='qwp')

    @classmethod
    def hwp(cls, fast_axis):
        return cls(np.pi, fast_axis, kind='hwp')

    @classmethod
    def window(cls, retardance, slow_axis):
        """Birefringent window described by its slow axis"""
        return cls(retardance, slow_axis + np.pi/2, kind='window')

    @property
    def matrix(self):
        """2x2 Jones matrix in the linear basis"""
        c, s = np.cos(self.fast_axis), np.sin(self.fast_axis)
        rot = np.array([[c, -s], [s, c]])
        return rot @ np.diag([np.exp(1j*self.retardance), 1]) @ rot.T


def apply_retarder(state, retarder):
    """
    Propagate a state through a retarder

    Parameters
    ----------
    state : PolarizationState

    retarder : Retarder

    Returns
    -------
    state : PolarizationState
    """
    ex, ey = retarder.matrix @ state.jones
    return PolarizationState.from_jones(ex, ey, normalize=False)


def propagate(state, retarders):
    """
    Apply a sequence of retarders in the order the light meets them
    """
    for retarder in retarders:
        state = apply_retarder(state, retarder)
    return state


def circularity_after_cell(theta, phi_k, theta_k):
    """
    Circularity of the light reaching the atoms

    A quarter-wave plate with fast axis at ``theta`` acts on horizontal light
    and the result passes through a cell window of retardance ``phi_k`` whose
    slow axis lies at ``theta_k``.

    Parameters
    ----------
    theta : float or array

    phi_k : float

    theta_k : float

    Returns
    -------
    C : float or array
    """
    theta = np.asarray(theta, dtype=float)
    val = (np.cos(phi_k) * np.sin(2*theta)
           + np.sin(phi_k) * np.cos(2*theta) * np.sin(2*(theta - theta_k)))
    return float(val) if val.ndim == 0 else val


def _dcircularity(theta, phi_k, theta_k):
    return (2 * np.cos(phi_k) * np.cos(2*theta)
            - 2 * np.sin(phi_k) * np.sin(2*theta) * np.sin(2*(theta-theta_k))
            + 2 * np.sin(phi_k) * np.cos(2*theta) * np.cos(2*(theta-theta_k)))


def nulling_angle(phi_k, theta_k, xtol=1e-12):
    """
    Quarter-wave plate angle that leaves linear light at the atoms

    The root of :func:`circularity_after_cell` closest to zero is bracketed
    on a grid over ``[-pi/4, pi/4]``, bisected and finished with one Newton
    step.

    Parameters
    ----------
    phi_k : float
        Window retardance, ``|phi_k| < pi/2``

    theta_k : float
        Window slow axis

    Returns
    -------
    theta_n : float
    """
    if abs(phi_k) >= np.pi/2:
        raise NoRootError("Window retardance {} is outside (-pi/2, pi/2)"
                          "".format(phi_k))
    if phi_k == 0:
        return 0.0
    grid = np.linspace(-np.pi/4, np.pi/4, 721)
    vals = circularity_after_cell(grid, phi_k, theta_k)
    idx = np.where(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if not len(idx):
        logger.error("No circularity zero for phi_k=%s, theta_k=%s",
                     phi_k, theta_k)
        raise NoRootError("Circularity does not change sign in the bracket")
    mid = 0.5 * (grid[idx] + grid[idx + 1])
    i = idx[np.argmin(np.abs(mid))]
    lo, hi = grid[i], grid[i + 1]
    if vals[i] == 0:
        return float(lo)
    if vals[i + 1] == 0:
        return float(hi)
    root = bisect(circularity_after_cell, lo, hi, args=(phi_k, theta_k),
                  xtol=xtol)
    slope = _dcircularity(root, phi_k, theta_k)
    if slope != 0:
        root -= circularity_after_cell(root, phi_k, theta_k) / slope
    logger.debug("Nulling angle for phi_k=%.3e, theta_k=%.3f is %.12f",
                 phi_k, theta_k, root)
    return float(root)


def linearizing_qwp_angle(state, xtol=1e-14):
    """
    Quarter-wave plate fast-axis angle that turns ``state`` linear

    Rotating the plate by pi/2 flips the sign of the output circularity, so a
    root always exists on ``[0, pi/2]``.

    Returns
    -------
    angle : float
        Angle in ``[0, pi/2]``
    """
    def output(angle):
        return apply_retarder(state, Retarder.qwp(angle)).circularity

    start = output(0.0)
    if start == 0:
        return 0.0
    try:
        return float(brentq(output, 0.0, np.pi/2, xtol=xtol))
    except ValueError as err:
        raise NoRootError("No linearizing angle found") from err


def fictitious_field(intensity, state, k_hat, alpha_v, g_f, f):
    """
    Effective magnetic field of the vector light shift

    ``B = -C k I alpha_v / (4 c eps0 mu_B g_F F)``

    Parameters
    ----------
    intensity : float or array
        Local intensity in W/m^2

    state : PolarizationState or float
        Polarization, or its circularity directly

    k_hat : array-like
        Propagation direction

    alpha_v : Polarizability or float
        Vector polarizability in C m^2/V

    g_f : float

    f : float

    Returns
    -------
    field : np.ndarray
        Field in gauss, shape ``intensity.shape + (3,)``
    """
    circ = getattr(state, 'circularity', state)
    k_hat = as_unit_vector(k_hat, name='k_hat')
    alpha = getattr(alpha_v, 'value', alpha_v)
    magnitude = (-circ * np.asarray(intensity, dtype=float) * alpha
                 / (4 * C * EPS0 * MU_B_GAUSS * g_f * f))
    return np.multiply.outer(magnitude, k_hat)
