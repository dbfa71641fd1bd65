"""
Physical constants shared across the package

All values are SI unless the name says otherwise. Magnetic fields inside the
package are expressed in gauss, so the gauss-flavoured quantities are
collected here as well.
"""
import numpy as np
from scipy import constants as sc

#: Speed of light (m/s)
C = sc.c
#: Vacuum permittivity (F/m)
EPS0 = sc.epsilon_0
#: Planck constant (J s)
H = sc.h
HBAR = sc.hbar
KB = sc.k
#: Bohr magneton (J/T)
MU_B = sc.physical_constants['Bohr magneton'][0]
#: Bohr magneton (J/G)
MU_B_GAUSS = MU_B * 1e-4
#: Bohr radius (m)
A0 = sc.physical_constants['Bohr radius'][0]
AMU = sc.physical_constants['atomic mass constant'][0]

#: Free-fall acceleration used for drop kinematics and trap sag (m/s^2)
GRAVITY = 9.81

#: 87Rb atomic mass (kg)
RB87_MASS = 86.909180527 * AMU
#: Nominal Lande factor of the 87Rb F=1 ground level
RB87_GF1 = -0.5
#: Quadratic Zeeman coefficient of the 87Rb F=1 clock pair (rad/s/G^2)
RB87_QZ = 2 * np.pi * 71.89
#: Spin-dependent interaction coefficient of 87Rb F=1 (J m^3)
RB87_C2 = -2.4e-53

#: Default trapping wavelength (m)
WAVELENGTH = 1064e-9

#: W/cm^2 expressed in W/m^2
W_PER_CM2 = 1e4
#: mG/cm expressed in G/m
MG_PER_CM = 1e-3 / 1e-2

#: Atomic unit of polarizability volume conversion, a0^3 in m^3
A0_CUBED = A0 ** 3


def gyromagnetic_ratio(g_f=RB87_GF1):
    """
    Magnitude of the Larmor angular frequency per gauss

    Parameters
    ----------
    g_f : float
        Lande factor

    Returns
    -------
    gamma : float
        |g_F| mu_B / hbar in rad/s/G
    """
    return abs(g_f) * MU_B_GAUSS / HBAR


#: |gamma| for 87Rb F=1 (rad/s/G), about 2 pi x 0.700 MHz/G
GAMMA_RB87 = gyromagnetic_ratio(RB87_GF1)
