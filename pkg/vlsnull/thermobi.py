"""
Thermally induced stress birefringence of a cell window heated by the trap
beam

The chain runs from the absorbed power, through the on-axis temperature rise
and the thermal stress, to the retardance profile across the beam and the
circularity it imprints on a linearly polarized beam.
"""
############
# Standard #
############
import logging
from dataclasses import dataclass, asdict

###############
# Third Party #
###############
import numpy as np
import pandas as pd

##########
# Module #
##########
from .constants import WAVELENGTH

logger = logging.getLogger(__name__)

#: Quoted far off-axis retardance for the default scenario in rad
QUOTED_THETA_MAX = 1.4e-4

#: Order of magnitude retardance drift of a quartz waveplate in rad/K
WAVEPLATE_DRIFT = 1e-4


@dataclass(frozen=True)
class WindowMaterial:
    """
    Optical, thermal and elastic constants of the window glass

    The defaults are those of fused silica

    Attributes
    ----------
    mu : float
        Volume absorption coefficient in 1/m

    k : float
        Thermal conductivity in W/m/K

    diffusivity : float
        Thermal diffusivity in m^2/s

    cte : float
        Coefficient of thermal expansion in 1/K

    young : float
        Young modulus in Pa

    poisson : float

    stress_optic : float
        Relative stress-optic coefficient in 1/Pa

    p11, p12 : float
        Photoelastic tensor components

    n0 : float
        Cold refractive index
    """
    mu: float = 0.1
    k: float = 1.31
    diffusivity: float = 7.5e-7
    cte: float = 5e-7
    young: float = 72e9
    poisson: float = 0.17
    stress_optic: float = 3.4e-12
    p11: float = 0.121
    p12: float = 0.270
    n0: float = 1.45

    def __post_init__(self):
        for field in ('k', 'diffusivity', 'cte', 'young', 'stress_optic',
                      'n0'):
            if not getattr(self, field) > 0:
                raise ValueError("{} must be positive".format(field))
        if self.mu < 0:
            raise ValueError("Absorption coefficient must be non-negative")
        if not 0 < self.poisson < 0.5:
            raise ValueError("Poisson ratio must lie in (0, 0.5)")

    @property
    def optoelastic(self):
        """Effective optoelastic coefficient Q in 1/K"""
        return optoelastic_coefficient(self)


@dataclass(frozen=True)
class HeatingScenario:
    """
    Trap beam passing through the window

    Attributes
    ----------
    power : float
        Trap beam power in W

    thickness : float
        Window thickness in m

    radius : float
        Mean 1/e^2 beam radius inside the window in m

    exposure : float
        Time the beam has been on in s

    wavelength : float
        m
    """
    power: float = 10.
    thickness: float = 5e-3
    radius: float = 145e-6
    exposure: float = 10.
    wavelength: float = WAVELENGTH

    def __post_init__(self):
        for field, value in asdict(self).items():
            if not value > 0:
                raise ValueError("{} must be positive".format(field))


def absorbed_power(scn, mat):
    """Absorbed power ``mu d P`` in W"""
    return mat.mu * scn.thickness * scn.power


def characteristic_temperature(scn, mat):
    """``T0 = P_abs / (4 pi k d)`` in K"""
    return absorbed_power(scn, mat) / (4 * np.pi * mat.k * scn.thickness)


def validity_window(scn, mat, t=None):
    """
    Times bracketing the infinite-medium heating model

    Returns
    -------
    tau : float
        Time for heat to diffuse across the beam radius

    t_thick : float
        Time for heat to diffuse through the window thickness

    valid : bool
        Whether ``tau < t < t_thick``
    """
    t = scn.exposure if t is None else t
    tau = scn.radius**2 / mat.diffusivity
    t_thick = scn.thickness**2 / mat.diffusivity
    return tau, t_thick, bool(tau < t < t_thick)


def temp_rise(scn, mat, t=None):
    """
    On-axis temperature rise ``T0 ln(1 + 2 D t / w^2)``

    Parameters
    ----------
    scn : HeatingScenario

    mat : WindowMaterial

    t : float or array, optional
        Time after the beam is turned on, the scenario exposure by default

    Returns
    -------
    dT : float or array
        Temperature rise in K

    T0 : float
        Characteristic temperature in K

    tau : float
        Diffusion time across the beam radius in s
    """
    t = scn.exposure if t is None else t
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("Time must be non-negative")
    t0 = characteristic_temperature(scn, mat)
    tau, t_thick, _ = validity_window(scn, mat)
    if np.any(t < tau) or np.any(t > t_thick):
        logger.warning("Heating model is valid for %.3g s < t < %.3g s",
                       tau, t_thick)
    dT = t0 * np.log1p(2 * mat.diffusivity * t / scn.radius**2)
    if dT.ndim == 0:
        dT = float(dT)
    return dT, t0, tau


def axial_stress(dT_max, mat):
    """Principal stresses on axis ``alpha E dT / 2`` in Pa"""
    return 0.5 * mat.cte * mat.young * dT_max


def opd_bound(sigma, mat, d, wavelength=WAVELENGTH):
    """
    Upper bound on the off-axis stress birefringence

    Returns
    -------
    opd : float
        Optical path difference ``K sigma d`` in m

    retardance : float
        ``2 pi OPD / lambda`` in rad
    """
    opd = mat.stress_optic * sigma * d
    return opd, 2 * np.pi * opd / wavelength


def optoelastic_coefficient(mat):
    """
    ``Q = n0^3 alpha (1 + nu) (p11 - p12) / (4 (1 - nu))``
    """
    return (mat.n0**3 * mat.cte * (1 + mat.poisson) * (mat.p11 - mat.p12)
            / (4 * (1 - mat.poisson)))


def retardance_max(scn, mat):
    """Far off-axis retardance ``4 pi d Q T0 / lambda`` in rad"""
    return (4 * np.pi * scn.thickness * optoelastic_coefficient(mat)
            * characteristic_temperature(scn, mat) / scn.wavelength)


def retardance_profile(scn, mat, r):
    """
    Radial stress birefringence retardance across the beam

    Parameters
    ----------
    r : float or array
        Distance from the beam axis in m

    Returns
    -------
    theta : float or array
        Retardance in rad, zero on axis

    theta_max : float
        Far off-axis limit

    circularity : float
        Peak circularity ``sin 2 theta_max`` of an initially linear beam
    """
    theta_max = retardance_max(scn, mat)
    x = 2 * np.square(np.asarray(r, dtype=float)) / scn.radius**2
    # (exp(-x) - 1) / x without the cancellation near the axis
    shape = np.where(x > 0, 1 + np.expm1(-x) / np.where(x > 0, x, 1), 0.)
    theta = theta_max * shape
    if theta.ndim == 0:
        theta = float(theta)
    return theta, theta_max, float(np.sin(2 * abs(theta_max)))


def profile_table(scn, mat, r=None):
    """
    Retardance and circularity across the window

    Parameters
    ----------
    r : array, optional
        Radii in m, by default out to four beam radii

    Returns
    -------
    profile : pandas.DataFrame
        ``r``, ``theta`` and ``circularity`` columns
    """
    if r is None:
        r = np.linspace(0, 4 * scn.radius, 201)
    theta, _, _ = retardance_profile(scn, mat, r)
    return pd.DataFrame({'r': r, 'theta': theta,
                         'circularity': np.sin(2 * np.abs(theta))})


def thermal_report(scn=None, mat=None):
    """
    Evaluate the full chain for one scenario

    The quoted far off-axis retardance is reported beside the value
    evaluated from the same constants, along with their ratio

    Returns
    -------
    report : dict
    """
    scn = scn or HeatingScenario()
    mat = mat or WindowMaterial()
    p_abs = absorbed_power(scn, mat)
    dT, t0, tau = temp_rise(scn, mat)
    _, t_thick, valid = validity_window(scn, mat)
    sigma = axial_stress(dT, mat)
    opd, theta_bound = opd_bound(sigma, mat, scn.thickness, scn.wavelength)
    theta_w, theta_max, circ = retardance_profile(scn, mat, scn.radius)
    flags = list()
    if not valid:
        flags.append('exposure outside the heating model validity window')
    if abs(theta_max) > 5 * theta_bound:
        flags.append('retardance profile exceeds the stress bound')
    for flag in flags:
        logger.warning(flag)
    logger.info("Window heating of %.3g K gives a far off-axis retardance "
                "of %.3g rad", dT, theta_max)
    return dict(scenario=asdict(scn), material=asdict(mat),
                absorbed_power=p_abs, t0=t0, tau=tau, t_thick=t_thick,
                delta_t=dT, stress=sigma, opd=opd,
                opd_retardance=theta_bound,
                optoelastic=optoelastic_coefficient(mat),
                theta_max=theta_max, theta_w=theta_w,
                theta_ratio=theta_w / theta_max if theta_max else np.nan,
                quoted_theta_max=QUOTED_THETA_MAX,
                theta_max_discrepancy=abs(theta_max) / QUOTED_THETA_MAX,
                peak_circularity=circ,
                waveplate_drift=WAVEPLATE_DRIFT,
                waveplate_note=('quartz waveplate retardance drifts by about '
                                '{:g} rad/K and is not modeled'
                                ''.format(WAVEPLATE_DRIFT)),
                flags=flags)
