"""
Angular momentum coefficients and far-detuned polarizabilities

The reduced vector polarizability of a ground hyperfine level is assembled
from fine-structure lines in two steps: a sum over the lines that depends only
on ``J`` (:func:`alpha1_nJ`) followed by the projection onto the hyperfine
level ``F`` (:func:`alpha_v_nJF`). Reduced dipole elements follow the
``(n'J'||d||nJ)`` convention, which is ``sqrt(2J+1)`` larger than the
``<nJ||d||n'J'>`` elements tabulated in the Steck data sheets.
"""
############
# Standard #
############
import math
import logging
from fractions import Fraction
from pathlib import Path
from dataclasses import dataclass, field, replace

###############
# Third Party #
###############
import numpy as np
import simplejson as sjson

##########
# Module #
##########
from .constants import C, EPS0, H, HBAR, A0_CUBED, AMU, W_PER_CM2
from .utils.exceptions import QuantumNumberError, NearResonanceError

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / 'data'

#: Number of linewidths inside which the far-detuned sums are refused
RESONANCE_GUARD = 10


def as_half_integer(value, name='j'):
    """
    Convert a non-negative integer or half-integer to an exact fraction

    Parameters
    ----------
    value : float, int or Fraction

    name : str, optional
        Label used in error messages

    Returns
    -------
    frac : fractions.Fraction
    """
    try:
        twice = 2 * Fraction(value).limit_denominator(1000)
    except (TypeError, ValueError) as err:
        raise QuantumNumberError("{} must be a number, got {!r}"
                                 "".format(name, value)) from err
    if twice.denominator != 1 or not np.isclose(2 * float(value),
                                                float(twice), atol=1e-9):
        raise QuantumNumberError("{} = {} is not a half-integer"
                                 "".format(name, value))
    if twice < 0:
        raise QuantumNumberError("{} = {} is negative".format(name, value))
    return twice / 2


def parity(exponent):
    """
    Evaluate (-1)**exponent for an integer-valued exponent
    """
    exponent = Fraction(exponent)
    if exponent.denominator != 1:
        raise QuantumNumberError("Phase exponent {} is not an integer"
                                 "".format(exponent))
    return -1 if exponent.numerator % 2 else 1


def _triangle(a, b, c):
    """Whether (a, b, c) couple to an integer total within triangle bounds"""
    if (a + b + c).denominator != 1:
        return False
    return abs(a - b) <= c <= a + b


def _delta_squared(a, b, c):
    return Fraction(math.factorial(int(a + b - c))
                    * math.factorial(int(a - b + c))
                    * math.factorial(int(-a + b + c)),
                    math.factorial(int(a + b + c + 1)))


def wigner6j(j1, j2, j3, j4, j5, j6):
    """
    Wigner 6j symbol {j1 j2 j3; j4 j5 j6} from the Racah formula

    The sum is carried out with exact integers and fractions; only the final
    square root is taken in floating point.

    Parameters
    ----------
    j1, j2, j3, j4, j5, j6 : float
        Non-negative integers or half-integers

    Returns
    -------
    value : float
        Zero when any of the four triads fails the triangle conditions
    """
    js = [as_half_integer(j, name='j{}'.format(i+1))
          for i, j in enumerate((j1, j2, j3, j4, j5, j6))]
    j1, j2, j3, j4, j5, j6 = js
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle(*t) for t in triads):
        return 0.0

    norm = Fraction(1)
    for t in triads:
        norm *= _delta_squared(*t)

    lower = [int(sum(t)) for t in triads]
    upper = [int(j1 + j2 + j4 + j5), int(j2 + j3 + j5 + j6),
             int(j3 + j1 + j6 + j4)]
    total = 0
    for t in range(max(lower), min(upper) + 1):
        den = 1
        for a in lower:
            den *= math.factorial(t - a)
        for b in upper:
            den *= math.factorial(b - t)
        total += Fraction((-1)**t * math.factorial(t + 1), den)

    if total == 0:
        return 0.0
    return math.copysign(math.sqrt(total * total * norm), total)


@dataclass(frozen=True)
class FineStructureLine:
    """
    Fine-structure transition from the ground level

    Attributes
    ----------
    label : str

    n : int
        Principal quantum number of the upper state

    j : float
        Total electronic angular momentum of the upper state

    omega : float
        Transition angular frequency in rad/s

    gamma : float
        Natural linewidth in rad/s

    dipole : float
        Magnitude of the reduced element |(n'J'||d||nJ)| in C m
    """
    label: str
    n: int
    j: float
    omega: float
    gamma: float
    dipole: float

    def __post_init__(self):
        as_half_integer(self.j, name='J\'')
        if not self.omega > 0:
            raise ValueError("Line {} needs a positive frequency"
                             "".format(self.label))
        if self.gamma < 0 or self.dipole < 0:
            raise ValueError("Line {} needs non-negative linewidth and dipole"
                             "".format(self.label))


@dataclass(frozen=True)
class HyperfineLevel:
    """
    Hyperfine level of the electronic ground state
    """
    n: int
    j: float
    i: float
    f: float
    g_f: float

    def __post_init__(self):
        j = as_half_integer(self.j, 'J')
        i = as_half_integer(self.i, 'I')
        f = as_half_integer(self.f, 'F')
        if not abs(j - i) <= f <= j + i or (j + i + f).denominator != 1:
            raise QuantumNumberError("F = {} cannot be formed from J = {} "
                                     "and I = {}".format(f, j, i))


@dataclass(frozen=True)
class Polarizability:
    """
    Polarizability value in SI units (C m^2/V)

    Attributes
    ----------
    value : float

    rank : str
        ``'scalar'``, ``'vector'`` or ``'vector-reduced'``

    provenance : str
        Species, level and wavelength the value belongs to

    flags : tuple of str
        Conditions noticed while computing the value
    """
    value: float
    rank: str = 'vector'
    provenance: str = ''
    flags: tuple = field(default_factory=tuple)

    #: Multiply an SI polarizability by this to obtain a polarizability
    #: volume in m^3
    SI_TO_VOLUME = 1 / (4 * np.pi * EPS0)

    def to_cgs(self):
        """Polarizability volume in cm^3"""
        return self.value * self.SI_TO_VOLUME * 1e6

    def to_atomic_units(self):
        """Polarizability volume in units of a0^3"""
        return self.value * self.SI_TO_VOLUME / A0_CUBED

    def in_units(self, units='si'):
        """
        Value in ``'si'``, ``'cgs'`` or ``'au'``
        """
        units = units.lower()
        if units == 'si':
            return self.value
        elif units == 'cgs':
            return self.to_cgs()
        elif units == 'au':
            return self.to_atomic_units()
        raise ValueError("Unknown polarizability units {!r}".format(units))

    @classmethod
    def from_cgs(cls, volume, **kwargs):
        return cls(volume * 1e-6 / cls.SI_TO_VOLUME, **kwargs)

    @classmethod
    def from_atomic_units(cls, volume, **kwargs):
        return cls(volume * A0_CUBED / cls.SI_TO_VOLUME, **kwargs)

    def scaled(self, factor):
        """Copy multiplied by a constant factor"""
        return replace(self, value=self.value * factor)


@dataclass(frozen=True)
class AtomicSpecies:
    """
    Everything the package needs to know about an atom
    """
    name: str
    mass: float
    n: int
    j: float
    i: float
    levels: dict
    lines: tuple
    source: str = ''

    def level(self, name):
        try:
            return self.levels[name]
        except KeyError:
            raise KeyError("Species {} has no level {!r}, choose from {}"
                           "".format(self.name, name,
                                     sorted(self.levels))) from None


def load_species(name='rb87', path=None):
    """
    Load a line table shipped with the package or from a file

    Parameters
    ----------
    name : str, optional
        Name of a table in the package data directory,
        ``<name>_lines.json``

    path : str or Path, optional
        Explicit path to a table; overrides ``name``

    Returns
    -------
    species : AtomicSpecies
    """
    path = Path(path) if path else DATA_DIR / '{}_lines.json'.format(name)
    logger.debug("Loading line table %s", path)
    with open(path, 'r') as f:
        table = sjson.load(f)

    j = table['ground']['J']
    convention = table.get('dipole_convention', 'reduced')
    if convention == 'steck':
        scale = math.sqrt(2 * j + 1)
    elif convention == 'reduced':
        scale = 1.0
    else:
        raise ValueError("Unknown dipole convention {!r}".format(convention))

    lines = tuple(FineStructureLine(label=line['label'],
                                    n=line['n_upper'],
                                    j=line['J_upper'],
                                    omega=2 * np.pi * line['frequency_hz'],
                                    gamma=2 * np.pi * line['linewidth_hz'],
                                    dipole=scale * line['dipole_cm'])
                  for line in table['lines'])
    levels = {key: HyperfineLevel(n=table['ground']['n'], j=j,
                                  i=table['nuclear_spin'],
                                  f=lvl['F'], g_f=lvl['g_F'])
              for key, lvl in table['levels'].items()}
    return AtomicSpecies(name=table['species'],
                         mass=table['mass_amu'] * AMU,
                         n=table['ground']['n'], j=j,
                         i=table['nuclear_spin'],
                         levels=levels, lines=lines,
                         source=table.get('source', ''))


def angular_frequency(wavelength):
    """Optical angular frequency in rad/s for a vacuum wavelength in m"""
    return 2 * np.pi * C / wavelength


def _check_detuning(lines, omega):
    for line in lines:
        detuning = abs(line.omega - omega)
        guard = RESONANCE_GUARD * line.gamma
        if detuning == 0 or detuning < guard:
            raise NearResonanceError("Frequency {:.6e} rad/s lies within {} "
                                     "linewidths of line {}"
                                     "".format(omega, RESONANCE_GUARD,
                                               line.label))


def _resonant_denominators(line, omega):
    """Real parts of the rotating and counter-rotating terms"""
    rot = (line.omega - omega) / ((line.omega - omega)**2
                                  + line.gamma**2 / 4)
    counter = (line.omega + omega) / ((line.omega + omega)**2
                                      + line.gamma**2 / 4)
    return rot, counter


def alpha1_nJ(lines, j, omega):
    """
    J-dependent part of the vector polarizability

    Parameters
    ----------
    lines : list of FineStructureLine

    j : float
        Ground-state J

    omega : float
        Optical angular frequency in rad/s

    Returns
    -------
    alpha1 : Polarizability
        Rank ``'vector-reduced'``
    """
    j = as_half_integer(j, 'J')
    _check_detuning(lines, omega)
    total = 0.0
    for line in lines:
        jp = as_half_integer(line.j, 'J\'')
        sixj = wigner6j(1, 1, 1, j, jp, j)
        rot, counter = _resonant_denominators(line, omega)
        term = parity(j + jp) * sixj * line.dipole**2 * (rot - counter) / HBAR
        logger.debug("Line %s contributes %.6e to alpha1", line.label,
                     math.sqrt(3) * term)
        total += term
    return Polarizability(math.sqrt(3) * total, rank='vector-reduced',
                          provenance='J={}, omega={:.6e}'.format(j, omega))


def alpha_v_nJF(alpha1, level, correction=1.0):
    """
    Project the reduced polarizability onto a hyperfine level

    Parameters
    ----------
    alpha1 : Polarizability
        Output of :func:`alpha1_nJ`

    level : HyperfineLevel

    correction : float, optional
        Flat multiplicative correction for the hyperfine structure ignored by
        the fine-structure treatment

    Returns
    -------
    alpha_v : Polarizability
        Carries the flag ``'vanishing-6j'`` when the level has no vector
        response
    """
    j = as_half_integer(level.j, 'J')
    i = as_half_integer(level.i, 'I')
    f = as_half_integer(level.f, 'F')
    sixj = wigner6j(f, 1, f, j, i, j)
    flags = ()
    if sixj == 0 or f == 0:
        logger.warning("Vector polarizability vanishes for F=%s, J=%s, I=%s",
                       f, j, i)
        flags = ('vanishing-6j',)
        prefactor = 0.0
    else:
        prefactor = (parity(j + i + f)
                     * math.sqrt(2 * f * (2 * f + 1) / (f + 1)) * sixj)
    return Polarizability(prefactor * alpha1.value * correction,
                          rank='vector',
                          provenance='{}, F={}'.format(alpha1.provenance, f),
                          flags=flags)


def alpha_scalar_nJ(lines, j, omega):
    """
    Scalar polarizability of the ground level

    Positive (attractive potential) below both D lines.
    """
    j = as_half_integer(j, 'J')
    _check_detuning(lines, omega)
    total = 0.0
    for line in lines:
        rot, counter = _resonant_denominators(line, omega)
        total += line.dipole**2 * (rot + counter)
    value = total / (3 * (2 * j + 1) * HBAR)
    return Polarizability(float(value), rank='scalar',
                          provenance='J={}, omega={:.6e}'.format(j, omega))


def vls_per_intensity(alpha_v, f):
    """
    Vector light shift per unit intensity alpha_v/(4 c eps0 F)

    Parameters
    ----------
    alpha_v : Polarizability or float
        Vector polarizability in C m^2/V

    f : float
        Hyperfine quantum number

    Returns
    -------
    shift : float
        Frequency shift in Hz per W/cm^2
    """
    value = getattr(alpha_v, 'value', alpha_v)
    f = float(as_half_integer(f, 'F'))
    if f == 0:
        raise QuantumNumberError("F = 0 has no vector light shift")
    return value / (4 * C * EPS0 * f * H) * W_PER_CM2


def vector_polarizability(species=None, level='F1', wavelength=1064e-9,
                          correction=1.0):
    """
    Convenience wrapper returning alpha_v for a species level and wavelength
    """
    species = species or load_species()
    lvl = species.level(level)
    omega = angular_frequency(wavelength)
    alpha1 = alpha1_nJ(species.lines, species.j, omega)
    alpha_v = alpha_v_nJF(alpha1, lvl, correction=correction)
    return replace(alpha_v, provenance='{} {} at {:.1f} nm'.format(
                                species.name, level, wavelength * 1e9))


def scalar_polarizability(species=None, wavelength=1064e-9):
    """
    Convenience wrapper returning the scalar polarizability
    """
    species = species or load_species()
    alpha = alpha_scalar_nJ(species.lines, species.j,
                            angular_frequency(wavelength))
    return replace(alpha, provenance='{} at {:.1f} nm'.format(
                                species.name, wavelength * 1e9))
