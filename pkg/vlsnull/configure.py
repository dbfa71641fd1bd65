"""
Run configuration for the command line front-end

A configuration is a JSON document with one section per concern. Every
section is a frozen dataclass and :func:`from_mapping` checks a plain mapping
against it, refusing unknown keys and values of the wrong type before any
computation starts.
"""
############
# Standard #
############
import hashlib
import logging
import typing
from dataclasses import dataclass, field, fields, asdict, is_dataclass, MISSING
from pathlib import Path

###############
# Third Party #
###############
import numpy as np
import simplejson as sjson

##########
# Module #
##########
from .utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

#: Commands understood by the front-end
COMMANDS = ('polarizability', 'simulate', 'fit', 'null', 'delayed-drop',
            'spinmix', 'thermal')


@dataclass(frozen=True)
class AtomSection:
    species: str = 'rb87'
    level: str = 'F1'
    wavelength: float = 1064e-9
    correction: float = 1.0


@dataclass(frozen=True)
class BeamsSection:
    """Single horizontal trap beam used for the trap site report"""
    power: float = 0.55
    waist: float = 67e-6
    circularity: float = 0.07


@dataclass(frozen=True)
class MagneticsSection:
    """Bias field in G and background gradient in G/cm"""
    b0: float = 0.681
    gradient: float = 22e-3


@dataclass(frozen=True)
class RamseySection:
    """
    Differential Ramsey settings for the ``simulate`` command

    ``delta_phi`` takes precedence over ``delta_b`` when given
    """
    t: float
    shots: int = 200
    contrast: float = 0.8
    noise: str = 'uniform'
    phase_noise: float = 0.0
    readout_noise: float = 0.02
    delta_b: float = 0.0
    delta_phi: typing.Optional[float] = None
    apply_qz: bool = False
    jackknife: bool = True


@dataclass(frozen=True)
class ProtocolSection:
    """
    In-trap nulling schedule

    Intensities are per rf unit in W/cm^2 and angles in degrees
    """
    intensity_a: float = 8.39e3
    intensity_b: float = 1.33 * 8.39e3
    power_a: float = 1.0
    power_b: float = 1.0
    offsets: tuple = (-0.1, -0.05, 0.0, 0.05, 0.1)
    angles: tuple = tuple(337.125 + k / 30 for k in range(-3, 3))
    t: float = 15e-3
    shots: int = 200
    repeats: int = 1
    background_repeats: int = 3
    resolution: typing.Optional[float] = None
    theta_n: float = 337.115
    separation: float = 54.1e-6
    contrast: float = 0.8
    readout_noise: float = 0.02
    apply_qz: bool = True


@dataclass(frozen=True)
class DelayedDropSection:
    delays: tuple = (0.0, 2.9157e-3)
    ramsey_start: float = 2.9157e-3
    t: float = 250e-6
    angles: tuple = tuple(float(a) for a in np.arange(0., 360., 15.))
    biases: tuple = ((0.5, 0., 0.), (0., 0.5, 0.), (0., 0., 0.5))
    bias_index: typing.Optional[int] = None
    shots: int = 200
    repeats: int = 1
    background_repeats: int = 3
    geometry: str = 'z'
    waist: float = 100e-6
    background: float = 1.43e-3
    theta_n: float = 0.0
    contrast: float = 0.8
    readout_noise: float = 0.02
    direction: bool = True


@dataclass(frozen=True)
class SpinMixSection:
    """
    Spin mixing run

    ``q`` in Hz overrides the value computed from ``b0``. The gradient is in
    mG/cm and the trap frequency in Hz
    """
    b0: float = 0.372
    q: typing.Optional[float] = None
    c2: float = -2.4e-53
    density: float = 8.84e19
    gradient: float = 0.0
    trap_frequency: float = 12.0
    r_tf: float = 5e-6
    damping: float = 20.0
    duration: float = 0.4
    dt: float = 5e-4


@dataclass(frozen=True)
class ThermalSection:
    power: float = 10.
    thickness: float = 5e-3
    radius: float = 145e-6
    exposure: float = 10.
    wavelength: float = 1064e-9
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
    profile: bool = True


@dataclass(frozen=True)
class RunConfig:
    """
    Complete configuration of one command line run

    Attributes
    ----------
    command : str

    seed : int
        Root seed every random substream derives from

    output : str
        Output directory

    units : str
        Polarizability units of reports, ``'si'``, ``'cgs'`` or ``'au'``

    format : str
        ``'csv'`` or ``'json'`` for tables
    """
    command: str
    seed: int = 0
    output: str = 'vlsnull-out'
    units: str = 'si'
    format: str = 'csv'
    atom: AtomSection = field(default_factory=AtomSection)
    beams: BeamsSection = field(default_factory=BeamsSection)
    magnetics: MagneticsSection = field(default_factory=MagneticsSection)
    ramsey: RamseySection = field(
                            default_factory=lambda: RamseySection(t=15e-3))
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    delayed_drop: DelayedDropSection = field(
                                        default_factory=DelayedDropSection)
    spinmix: SpinMixSection = field(default_factory=SpinMixSection)
    thermal: ThermalSection = field(default_factory=ThermalSection)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError('command', 'one of {}'.format(', '.join(COMMANDS)))
        if self.units not in ('si', 'cgs', 'au'):
            raise ConfigError('units', "'si', 'cgs' or 'au'")
        if self.format not in ('csv', 'json'):
            raise ConfigError('format', "'csv' or 'json'")


def _describe(tp):
    if is_dataclass(tp):
        return 'a mapping'
    args = typing.get_args(tp)
    if typing.get_origin(tp) is typing.Union:
        return ' or '.join(_describe(a) for a in args)
    return {float: 'a number', int: 'an integer', bool: 'a boolean',
            str: 'a string', tuple: 'a list', type(None): 'null'}.get(
                                                            tp, str(tp))


def _to_tuple(value):
    if isinstance(value, (list, tuple)):
        return tuple(_to_tuple(v) for v in value)
    return value


def _coerce(value, tp, key):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        for option in typing.get_args(tp):
            try:
                return _coerce(value, option, key)
            except ConfigError:
                continue
        raise ConfigError(key, _describe(tp))
    if is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(key, _describe(tp))
        return from_mapping(tp, value, prefix=key)
    if tp is type(None):
        if value is None:
            return None
    elif tp is bool:
        if isinstance(value, bool):
            return value
    elif tp is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif tp is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif tp is str:
        if isinstance(value, str):
            return value
    elif tp is tuple:
        if isinstance(value, (list, tuple)):
            return _to_tuple(value)
    raise ConfigError(key, _describe(tp))


def from_mapping(cls, mapping, prefix=''):
    """
    Build a configuration dataclass from a plain mapping

    Parameters
    ----------
    cls : type
        Dataclass to build

    mapping : dict

    prefix : str, optional
        Dotted path of ``mapping`` inside the whole document

    Raises
    ------
    ConfigError
        Unknown key, missing required key, or a value of the wrong type. The
        error names the dotted key path
    """
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in fields(cls)}
    kwargs = dict()
    for key, value in mapping.items():
        path = '.'.join(filter(None, (prefix, key)))
        if key not in known:
            logger.error("Configuration key %s is not recognized", path)
            raise ConfigError(path)
        kwargs[key] = _coerce(value, hints[key], path)
    for name, fld in known.items():
        if (name not in kwargs and fld.default is MISSING
                and fld.default_factory is MISSING):
            raise ConfigError('.'.join(filter(None, (prefix, name))),
                              msg="Required configuration key {!r} is "
                                  "missing".format(
                                    '.'.join(filter(None, (prefix, name)))))
    return cls(**kwargs)


def default_config(command, **kwargs):
    """
    Configuration with the default parameters of one command
    """
    if command not in COMMANDS:
        raise ConfigError('command', 'one of {}'.format(', '.join(COMMANDS)))
    return RunConfig(command=command, **kwargs)


def to_mapping(cfg):
    return asdict(cfg)


def load_config(path, command=None):
    """
    Read a JSON configuration file

    ``command`` fills in the command when the file leaves it out
    """
    with open(path, 'r') as fh:
        try:
            mapping = sjson.load(fh)
        except sjson.JSONDecodeError as exc:
            raise ConfigError('', msg="Could not parse {}: {}".format(path,
                                                                       exc))
    if not isinstance(mapping, dict):
        raise ConfigError('', 'a mapping at the top level')
    if command is not None:
        mapping.setdefault('command', command)
    return from_mapping(RunConfig, mapping)


def dump_config(cfg, path):
    Path(path).write_text(canonical_json(to_mapping(cfg), indent=2))


def canonical_json(obj, indent=None):
    """Sorted-key JSON text with NaN written as null"""
    return sjson.dumps(obj, sort_keys=True, ignore_nan=True, indent=indent,
                       default=_jsonable)


def config_hash(cfg):
    """SHA-256 of the canonical JSON encoding of a configuration"""
    text = canonical_json(to_mapping(cfg))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError("{!r} is not JSON serializable".format(obj))
