"""
Single-mode spin-1 spin mixing with gradient-driven component separation

The spinor is described by the m_F = 0 population ``rho0`` and the relative
phase ``theta_s = theta_+1 + theta_-1 - 2 theta_0``, with the magnetization
``m`` held fixed. In units of hbar the mean-field energy is::

    E = c rho0 [(1 - rho0) + sqrt((1 - rho0)^2 - m^2) cos(theta_s)]
        + q (1 - rho0)

and ``(rho0, theta_s)`` evolve as a canonical pair, ``d rho0/dt = -2 dE/dtheta``
and ``d theta/dt = 2 dE/d rho0``.

A magnetic gradient pushes the m_F = +1 and m_F = -1 centroids apart in the
trap. Their separation reduces the overlap with which the components interact
and the interaction energy is scaled by the overlap factor.
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
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.signal import find_peaks

##########
# Module #
##########
from .constants import HBAR, MU_B_GAUSS, RB87_C2, RB87_GF1, RB87_MASS, RB87_QZ
from .utils.exceptions import IntegrationError, StepSizeError

logger = logging.getLogger(__name__)

#: Trajectory table columns
COLUMNS = ['t', 'rho_m1', 'rho_0', 'rho_p1', 'theta_s', 'y_m1', 'y_p1',
           'overlap']


def quadratic_zeeman(b0, qz=RB87_QZ):
    """Quadratic Zeeman energy ``q_Z B0^2`` in rad/s for a bias in G"""
    return qz * b0**2


def interaction_energy(c2=RB87_C2, density=8.84e19):
    """Spin-dependent interaction ``c2 <n> / hbar`` in rad/s"""
    return c2 * density / HBAR


@dataclass(frozen=True)
class SpinorState:
    """
    Populations, spinor phase and component centroids

    Attributes
    ----------
    rho : tuple
        (rho_-1, rho_0, rho_+1)

    theta_s : float
        Relative spinor phase in rad

    centroids : tuple
        (y_-1, y_0, y_+1) in m, along the gradient

    velocities : tuple
        Centroid velocities in m/s
    """
    rho: tuple
    theta_s: float = 0.0
    centroids: tuple = (0., 0., 0.)
    velocities: tuple = (0., 0., 0.)

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        if len(rho) != 3:
            raise ValueError("Three populations are needed")
        if min(rho) < -1e-12:
            raise ValueError("Populations must be non-negative")
        if abs(sum(rho) - 1) > 1e-9:
            raise ValueError("Populations must sum to one, got {}"
                             "".format(sum(rho)))
        if abs(rho[2] - rho[0]) > 1 - rho[1] + 1e-12:
            raise ValueError("Magnetization exceeds 1 - rho_0")
        object.__setattr__(self, 'rho', rho)

    @property
    def m(self):
        return magnetization(self)

    @property
    def rho0(self):
        return self.rho[1]

    @classmethod
    def from_rho0(cls, rho0, m, theta_s=0., **kwargs):
        return cls(rho=((1 - rho0 - m) / 2, rho0, (1 - rho0 + m) / 2),
                   theta_s=theta_s, **kwargs)


@dataclass(frozen=True)
class SpinMixParams:
    """
    Parameters of the spin-mixing simulation

    Attributes
    ----------
    q : float
        Quadratic Zeeman energy in rad/s

    c : float
        Spin-dependent interaction energy in rad/s

    gradient : float
        Field magnitude gradient across the condensate in G/cm

    trap_frequency : float
        Trap angular frequency along the gradient in rad/s

    r_tf : float
        Thomas-Fermi radius in m

    damping : float
        Damping rate of the centroid motion in 1/s

    g_f : float

    mass : float
        kg
    """
    q: float = quadratic_zeeman(0.372)
    c: float = interaction_energy()
    gradient: float = 0.0
    trap_frequency: float = 2 * np.pi * 12
    r_tf: float = 5e-6
    damping: float = 20.0
    g_f: float = RB87_GF1
    mass: float = RB87_MASS

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("Quadratic Zeeman energy must be non-negative")
        if not self.trap_frequency > 0 or not self.r_tf > 0:
            raise ValueError("Trap frequency and radius must be positive")
        if self.damping < 0:
            raise ValueError("Damping must be non-negative")

    @property
    def acceleration(self):
        """Stern-Gerlach acceleration of the m_F = +/-1 centroids (m/s^2)"""
        return abs(self.g_f) * MU_B_GAUSS * abs(self.gradient) * 100 \
            / self.mass


def initial_after_pi2():
    """
    State after a pi/2 rf pulse on m_F = -1

    The rotation is taken about y, which leaves all three amplitudes real
    and positive, so ``theta_s = 0``
    """
    return SpinorState(rho=(0.25, 0.5, 0.25), theta_s=0.0)


def magnetization(state):
    """``m = rho_+1 - rho_-1``"""
    rho = getattr(state, 'rho', state)
    return rho[2] - rho[0]


def _root(rho0, m):
    return np.sqrt(np.maximum((1 - rho0)**2 - m**2, 0.0))


def energy(rho0, theta_s, m, q, c):
    """Mean-field energy in rad/s"""
    return (c * rho0 * ((1 - rho0) + _root(rho0, m) * np.cos(theta_s))
            + q * (1 - rho0))


def equations_of_motion(rho0, theta_s, m, q, c):
    """
    Time derivatives of ``rho0`` and ``theta_s``
    """
    root = _root(rho0, m)
    drho = 2 * c * rho0 * root * np.sin(theta_s)
    if root > 0:
        coupling = ((1 - rho0) * (1 - 2 * rho0) - m**2) / root
    else:
        coupling = 0.0
    dtheta = -2 * q + 2 * c * (1 - 2 * rho0) + 2 * c * coupling \
        * np.cos(theta_s)
    return drho, dtheta


def overlap(separation, r_tf):
    """
    Overlap of two Thomas-Fermi clouds treated as gaussians

    ``exp(-dy^2 / (4 r_TF^2 / 5))``
    """
    return np.exp(-np.square(separation) / (4 * r_tf**2 / 5))


def _centroid_rhs(y, v, params):
    # m_F = +1 centroid, the -1 centroid mirrors it
    return v, -params.trap_frequency**2 * y - params.damping * v \
        - params.acceleration


def _check_step(params, dt):
    scales = [2 * np.pi / abs(x) for x in (params.q, params.c) if x]
    if scales and dt > min(scales) / 50:
        raise StepSizeError("Step {} s does not resolve the dynamics, use "
                            "at most {:.3e} s".format(dt, min(scales) / 50))


def _times(t_span, dt):
    t0, t1 = t_span
    if not t1 > t0 or not dt > 0:
        raise ValueError("Need t1 > t0 and a positive step")
    n = int(np.floor((t1 - t0) / dt + 1e-9)) + 1
    return t0 + dt * np.arange(n)


def evolve_sma(state, params, t_span, dt, separate=True, rtol=1e-12,
               atol=1e-13):
    """
    Integrate the single-mode dynamics

    Parameters
    ----------
    state : SpinorState

    params : SpinMixParams

    t_span : tuple
        Start and end time in s

    dt : float
        Sampling step of the returned trajectory

    separate : bool, optional
        Scale the interaction by the overlap of the separating components.
        With ``False`` the Hamiltonian is time independent

    Returns
    -------
    trajectory : pandas.DataFrame
        Columns ``t, rho_m1, rho_0, rho_p1, theta_s, y_m1, y_p1, overlap``

    Raises
    ------
    StepSizeError
        ``dt`` does not resolve ``2 pi / max(q, |c|)``

    IntegrationError
        The integrator failed
    """
    _check_step(params, dt)
    m = magnetization(state)
    times = _times(t_span, dt)
    y_p, v_p = state.centroids[2], state.velocities[2]

    def rhs(t, x):
        rho0, theta, y, v = x
        lam = overlap(2 * y, params.r_tf) if separate else 1.0
        drho, dtheta = equations_of_motion(rho0, theta, m, params.q,
                                           params.c * lam)
        if separate:
            dy, dv = _centroid_rhs(y, v, params)
        else:
            dy, dv = 0., 0.
        return [drho, dtheta, dy, dv]

    x0 = [state.rho0, state.theta_s, y_p, v_p]
    sol = solve_ivp(rhs, (times[0], times[-1]), x0, method='DOP853',
                    t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        logger.error("Spin mixing integration failed: %s", sol.message)
        raise IntegrationError(sol.message)
    rho0, theta, y, _ = sol.y
    rho0 = np.clip(rho0, 0, 1 - abs(m))
    frame = pd.DataFrame({'t': sol.t,
                          'rho_m1': (1 - rho0 - m) / 2,
                          'rho_0': rho0,
                          'rho_p1': (1 - rho0 + m) / 2,
                          'theta_s': theta,
                          'y_m1': -y,
                          'y_p1': y,
                          'overlap': overlap(2 * y, params.r_tf)
                          if separate else np.ones_like(y)},
                         columns=COLUMNS)
    logger.debug("Integrated %s samples, %s right-hand side evaluations",
                 len(frame), sol.nfev)
    return frame


def component_separation(params, t_span, dt=1e-4):
    """
    Centroid trajectories of the m_F = +/-1 components and their overlap

    The centroids start at rest at the trap center and obey damped harmonic
    motion driven by the opposite Stern-Gerlach forces

    Returns
    -------
    trajectory : pandas.DataFrame
        Columns ``t, y_m1, y_p1, separation, overlap``
    """
    times = _times(t_span, dt)

    def rhs(t, x):
        return list(_centroid_rhs(x[0], x[1], params))

    sol = solve_ivp(rhs, (times[0], times[-1]), [0., 0.], method='DOP853',
                    t_eval=times, rtol=1e-10, atol=1e-15)
    if not sol.success:
        raise IntegrationError(sol.message)
    y = sol.y[0]
    return pd.DataFrame({'t': sol.t, 'y_m1': -y, 'y_p1': y,
                         'separation': 2 * np.abs(y),
                         'overlap': overlap(2 * y, params.r_tf)})


def trajectory_energy(trajectory, params):
    """Energy of every sample with the full interaction strength"""
    m = trajectory['rho_p1'] - trajectory['rho_m1']
    return energy(trajectory['rho_0'].values, trajectory['theta_s'].values,
                  m.values, params.q, params.c)


def oscillation_amplitude(trajectory, skip=None):
    """
    Half the peak-to-peak excursion of rho_0

    Parameters
    ----------
    skip : float, optional
        Samples before this time are ignored. Defaults to a quarter of the
        trajectory, which leaves out the transient while the components
        separate
    """
    t = trajectory['t'].values
    if skip is None:
        skip = t[0] + (t[-1] - t[0]) / 4
    rho0 = trajectory['rho_0'].values[t >= skip]
    if not len(rho0):
        return 0.0
    return float(0.5 * (rho0.max() - rho0.min()))


def oscillation_periods(trajectory, prominence=None):
    """
    Count the rho_0 oscillations in a trajectory

    Parameters
    ----------
    prominence : float, optional
        Minimum peak prominence, by default a fifth of the full excursion

    Returns
    -------
    count : int
        Number of maxima

    period : float
        Mean spacing of the maxima in s, NaN with fewer than two
    """
    rho0 = trajectory['rho_0'].values
    t = trajectory['t'].values
    if prominence is None:
        prominence = 0.2 * (rho0.max() - rho0.min())
    if prominence <= 0:
        return 0, np.nan
    peaks, _ = find_peaks(rho0, prominence=prominence)
    period = float(np.mean(np.diff(t[peaks]))) if len(peaks) > 1 else np.nan
    return len(peaks), period
