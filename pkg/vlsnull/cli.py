"""
Command line front-end

Every command reads a :class:`.RunConfig`, runs one pipeline, writes its
tables and reports into the output directory and finishes with a
``manifest.json`` listing the content hash of every file written.
"""
############
# Standard #
############
import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from dataclasses import replace

###############
# Third Party #
###############
import numpy as np
import pandas as pd

##########
# Module #
##########
from . import __version__
from . import protocols, spinmix, thermobi
from .atomprops import (load_species, scalar_polarizability,
                        vector_polarizability, vls_per_intensity)
from .configure import (COMMANDS, canonical_json, default_config,
                        load_config, to_mapping)
from .constants import GAMMA_RB87, MG_PER_CM, W_PER_CM2
from .manifest import RunManifest
from .polopt import state_from_theta_phi
from .ramsey import (RamseyConfig, ellipse_fit, phase_grid, shots_from_frame,
                     shots_to_frame, simulate_shots)
from .trapfield import GaussianBeam, VLSFieldMap, trap_frequencies, trap_minimum
from .utils.exceptions import (ConfigError, DegenerateFitError,
                               FilterCountError, IntegrationError,
                               NearResonanceError, NoRootError,
                               RamseyConfigError, RankDeficientError,
                               ScheduleError,
                               StepSizeError, TrapUnboundError,
                               VLSNullException)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DEGENERATE = 4

EXIT_CODES = ((ConfigError, EXIT_CONFIG),
              ((ScheduleError, RamseyConfigError), EXIT_CONFIG),
              (DegenerateFitError, EXIT_DEGENERATE),
              ((NearResonanceError, NoRootError, TrapUnboundError,
                IntegrationError, StepSizeError, RankDeficientError,
                FilterCountError), EXIT_NUMERICAL))

LOG_FORMAT = ('%(asctime)s.%(msecs)03d %(module)-13s %(levelname)-8s '
              '%(threadName)-10s %(message)s')

#: Columns of the tables each command writes, shown in --help
TABLES = {
    'polarizability': 'polarizability.json: report, no tables',
    'simulate': 'shots: phase, FzA, FzB; fit.json',
    'fit': 'fit.json',
    'null': ('points: angle, dI_over_I, dI, dB, dB_err; '
             'slopes: angle, slope, slope_err; nulling.json'),
    'delayed-drop': ('scan: angle, dB, dB_err, gradient; '
                     'direction: index, bx, by, bz, delta_b, delta_b_err; '
                     'delayed_drop.json'),
    'spinmix': ('trajectory: t, rho_m1, rho_0, rho_p1, theta_s, y_m1, y_p1, '
                'overlap; spinmix.json'),
    'thermal': 'profile: r, theta, circularity; thermal.json',
}


class Output:
    """
    Writes tables and reports into one directory and records them
    """
    def __init__(self, root, fmt, manifest):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt
        self.manifest = manifest

    def table(self, frame, stem):
        path = self.root / '{}.{}'.format(stem, self.fmt)
        if self.fmt == 'csv':
            frame.to_csv(path, index=False, float_format='%.12g')
        else:
            path.write_text(canonical_json(frame.to_dict(orient='records'),
                                           indent=1))
        self.manifest.add(path, self.root)
        logger.info("Wrote %s", path)
        return path

    def report(self, obj, name):
        path = self.root / name
        path.write_text(canonical_json(obj, indent=2))
        self.manifest.add(path, self.root)
        logger.info("Wrote %s", path)
        return path


############
# Commands #
############

def _species(cfg):
    try:
        species = load_species(cfg.atom.species)
    except FileNotFoundError:
        raise ConfigError('atom.species', 'a species with a packaged line '
                                          'table')
    try:
        species.level(cfg.atom.level)
    except KeyError:
        raise ConfigError('atom.level', 'one of {}'.format(
                                        ', '.join(sorted(species.levels))))
    return species


def _alpha_v(cfg, species=None):
    species = species or _species(cfg)
    return vector_polarizability(species, level=cfg.atom.level,
                                 wavelength=cfg.atom.wavelength,
                                 correction=cfg.atom.correction)


def trap_site_report(cfg, species, alpha_v, alpha_s):
    """
    Sag, light-induced field and its vertical gradient at the minimum of a
    single horizontal beam
    """
    beams = cfg.beams
    state = state_from_theta_phi(0.5 * np.arcsin(beams.circularity), 0.)
    beam = GaussianBeam(beams.power, beams.waist,
                        wavelength=cfg.atom.wavelength,
                        polarization=state, label='trap')
    minimum = trap_minimum([beam], alpha_s, species.mass)
    omegas, _ = trap_frequencies([beam], alpha_s, species.mass, minimum)
    fmap = VLSFieldMap([beam], alpha_v, g_f=species.level(cfg.atom.level).g_f,
                       f=species.level(cfg.atom.level).f)
    return dict(sag=float(-minimum[1]),
                b_vls=float(fmap.magnitude(minimum)),
                gradient=float(fmap.gradient(minimum) / MG_PER_CM),
                trap_frequencies=(omegas / (2 * np.pi)).tolist())


def cmd_polarizability(cfg, out):
    species = _species(cfg)
    alpha_v = _alpha_v(cfg, species)
    alpha_s = scalar_polarizability(species, wavelength=cfg.atom.wavelength)
    level = species.level(cfg.atom.level)
    report = dict(species=species.name, level=cfg.atom.level,
                  wavelength=cfg.atom.wavelength,
                  alpha_v=alpha_v.value, alpha_v_cgs=alpha_v.to_cgs(),
                  alpha_v_au=alpha_v.to_atomic_units(),
                  units=cfg.units, value=alpha_v.in_units(cfg.units),
                  alpha_scalar=alpha_s.value,
                  vls_hz_per_w_cm2=vls_per_intensity(alpha_v, level.f),
                  flags=list(alpha_v.flags),
                  trap=trap_site_report(cfg, species, alpha_v, alpha_s))
    out.report(report, 'polarizability.json')
    return report


def cmd_simulate(cfg, out):
    ram = cfg.ramsey
    delta_b = ram.delta_b
    if ram.delta_phi is not None:
        delta_b = ram.delta_phi / (GAMMA_RB87 * ram.t)
    config = RamseyConfig(t=ram.t, pulse_phases=phase_grid(ram.shots),
                          contrast_a=ram.contrast, contrast_b=ram.contrast,
                          noise=ram.noise, phase_noise=ram.phase_noise,
                          readout_noise=ram.readout_noise, delta_b=delta_b,
                          b0=cfg.magnetics.b0, apply_qz=ram.apply_qz,
                          seed=cfg.seed)
    shots = simulate_shots(config)
    out.table(shots_to_frame(shots), 'shots')
    fit = ellipse_fit(shots, jackknife=ram.jackknife)
    report = fit.to_dict()
    report.update(true_delta_phi=config.delta_phase, delta_b=delta_b,
                  measured_delta_b=fit.delta_phi / (GAMMA_RB87 * ram.t))
    out.report(report, 'fit.json')
    return report


def cmd_fit(cfg, out, shots=None):
    if shots is None:
        raise ConfigError('shots', 'a path to a shot table')
    try:
        frame = pd.read_csv(shots)
        records = shots_from_frame(frame)
    except (FileNotFoundError, KeyError) as exc:
        raise ConfigError('shots', 'a shot table with phase, FzA and FzB '
                                   'columns ({})'.format(exc))
    fit = ellipse_fit(records, jackknife=cfg.ramsey.jackknife)
    report = fit.to_dict()
    report['measured_delta_b'] = fit.delta_phi / (GAMMA_RB87 * cfg.ramsey.t)
    out.report(report, 'fit.json')
    return report


def cmd_null(cfg, out):
    prot = cfg.protocol
    plan = protocols.InTrapPlan(p_a=prot.intensity_a * W_PER_CM2,
                                p_b=prot.intensity_b * W_PER_CM2,
                                power_a=prot.power_a, power_b=prot.power_b,
                                offsets=prot.offsets, angles=prot.angles,
                                t=prot.t, shots=prot.shots,
                                repeats=prot.repeats,
                                resolution=prot.resolution)
    result, tables = protocols.nulling_pipeline(
                            plan, background_repeats=prot.background_repeats,
                            alpha_v=_alpha_v(cfg), theta_n=prot.theta_n,
                            gradient=cfg.magnetics.gradient,
                            separation=prot.separation,
                            contrast=prot.contrast,
                            readout_noise=prot.readout_noise,
                            b0=cfg.magnetics.b0, apply_qz=prot.apply_qz,
                            seed=cfg.seed)
    out.table(tables['points'], 'points')
    out.table(tables['slopes'], 'slopes')
    report = result.to_dict()
    out.report(report, 'nulling.json')
    return report


def cmd_delayed_drop(cfg, out):
    dd = cfg.delayed_drop
    plan = protocols.DelayedDropPlan(delays=dd.delays,
                                     ramsey_start=dd.ramsey_start, t=dd.t,
                                     angles=dd.angles, biases=dd.biases,
                                     shots=dd.shots, repeats=dd.repeats)
    if dd.geometry not in protocols.DELAYED_DROP_GEOMETRIES:
        raise ConfigError('delayed_drop.geometry', 'one of {}'.format(
                    ', '.join(sorted(protocols.DELAYED_DROP_GEOMETRIES))))
    kwargs = dict(alpha_v=_alpha_v(cfg), geometry=dd.geometry,
                  waist=dd.waist, background=dd.background,
                  contrast=dd.contrast, readout_noise=dd.readout_noise,
                  seed=cfg.seed)
    result, table = protocols.delayed_drop_scan(
                            plan, bias_index=dd.bias_index,
                            background_repeats=dd.background_repeats,
                            theta_n=dd.theta_n, **kwargs)
    out.table(table, 'scan')
    report = dict(scan=result.to_dict())
    if dd.direction:
        u, mag, meas = protocols.vls_direction(
                            plan, theta_n=dd.theta_n,
                            background_repeats=dd.background_repeats,
                            **kwargs)
        frame = pd.DataFrame({'index': [m['index'] for m in meas],
                              'bx': [m['bias'][0] for m in meas],
                              'by': [m['bias'][1] for m in meas],
                              'bz': [m['bias'][2] for m in meas],
                              'delta_b': [m['delta_b'] for m in meas],
                              'delta_b_err': [m['delta_b_err']
                                              for m in meas]})
        out.table(frame, 'direction')
        report['direction'] = dict(u=list(u), magnitude=mag)
    out.report(report, 'delayed_drop.json')
    return report


def spinmix_params(section, gradient=None):
    """Simulation parameters from a configuration section"""
    q = (2 * np.pi * section.q if section.q is not None
         else spinmix.quadratic_zeeman(section.b0))
    gradient = section.gradient if gradient is None else gradient
    return spinmix.SpinMixParams(
                q=q, c=spinmix.interaction_energy(section.c2, section.density),
                gradient=gradient * MG_PER_CM / 100,
                trap_frequency=2 * np.pi * section.trap_frequency,
                r_tf=section.r_tf, damping=section.damping)


def cmd_spinmix(cfg, out):
    section = cfg.spinmix
    state = spinmix.initial_after_pi2()
    span = (0., section.duration)
    params = spinmix_params(section)
    traj = spinmix.evolve_sma(state, params, span, section.dt)
    out.table(traj, 'trajectory')
    count, period = spinmix.oscillation_periods(traj)
    amplitude = spinmix.oscillation_amplitude(traj)
    if section.gradient:
        ref = spinmix.evolve_sma(state, spinmix_params(section, gradient=0.),
                                 span, section.dt)
        reference = spinmix.oscillation_amplitude(ref)
    else:
        reference = amplitude
    ratio = amplitude / reference if reference else np.nan
    report = dict(q=params.q, c=params.c, gradient=section.gradient,
                  periods=count, period=period, amplitude=amplitude,
                  reference_amplitude=reference, suppression=ratio,
                  min_overlap=float(traj['overlap'].min()),
                  max_separation=float(2 * traj['y_p1'].abs().max()),
                  oscillating=bool(count >= 3),
                  suppressed=bool(ratio < 0.2))
    if report['suppressed']:
        logger.info("Spin mixing suppressed to %.2f of the gradient-free "
                    "amplitude", ratio)
    out.report(report, 'spinmix.json')
    return report


def cmd_thermal(cfg, out):
    th = cfg.thermal
    scn = thermobi.HeatingScenario(power=th.power, thickness=th.thickness,
                                   radius=th.radius, exposure=th.exposure,
                                   wavelength=th.wavelength)
    mat = thermobi.WindowMaterial(mu=th.mu, k=th.k,
                                  diffusivity=th.diffusivity, cte=th.cte,
                                  young=th.young, poisson=th.poisson,
                                  stress_optic=th.stress_optic, p11=th.p11,
                                  p12=th.p12, n0=th.n0)
    report = thermobi.thermal_report(scn, mat)
    if th.profile:
        out.table(thermobi.profile_table(scn, mat), 'profile')
    out.report(report, 'thermal.json')
    return report


HANDLERS = {'polarizability': cmd_polarizability,
            'simulate': cmd_simulate,
            'fit': cmd_fit,
            'null': cmd_null,
            'delayed-drop': cmd_delayed_drop,
            'spinmix': cmd_spinmix,
            'thermal': cmd_thermal}


###########
# Parsing #
###########

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path,
                        help='JSON run configuration')
    common.add_argument('--seed', type=int,
                        help='Root seed, overrides the configuration')
    common.add_argument('--out', type=Path,
                        help='Output directory, overrides the configuration')
    common.add_argument('--format', choices=('csv', 'json'),
                        help='Table format, overrides the configuration')
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for info, -vv for debug messages')
    common.add_argument('--log-file', type=Path,
                        help='Also log at debug level to a rotating file')
    parser = argparse.ArgumentParser(
                prog='vlsnull',
                description='Vector light shift simulation and analysis')
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True
    for name in COMMANDS:
        cmd = sub.add_parser(name, parents=[common],
                             help=HANDLERS[name].__name__[4:].replace('_',
                                                                      ' '),
                             epilog='Outputs: ' + TABLES[name])
        if name == 'fit':
            cmd.add_argument('shots', type=Path,
                             help='CSV table with phase, FzA, FzB columns')
    return parser


def setup_logging(verbose=0, log_file=None):
    root = logging.getLogger()
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    root.setLevel(logging.DEBUG if log_file else level)
    stream = logging.StreamHandler()
    stream.setLevel(level)
    stream.setFormatter(logging.Formatter('%(levelname)-8s %(message)s'))
    root.addHandler(stream)
    if log_file:
        do_rollover = Path(log_file).is_file()
        handler = RotatingFileHandler(str(log_file), backupCount=9)
        if do_rollover:
            handler.doRollover()
        handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT,
                                               datefmt='%H:%M:%S'))
        root.addHandler(handler)


def resolve_config(args):
    """Configuration file, or command defaults, with flag overrides"""
    if args.config:
        try:
            cfg = load_config(args.config, command=args.command)
        except FileNotFoundError:
            raise ConfigError('--config', msg="No configuration file {}"
                                              "".format(args.config))
        if cfg.command != args.command:
            raise ConfigError('command', "'{}' to match the command line"
                                         "".format(args.command))
    else:
        cfg = default_config(args.command)
    overrides = dict()
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.out is not None:
        overrides['output'] = str(args.out)
    if args.format is not None:
        overrides['format'] = args.format
    return replace(cfg, **overrides)


def exit_code(exc):
    for types, code in EXIT_CODES:
        if isinstance(exc, types):
            return code
    return EXIT_FAILURE


def run(cfg, **kwargs):
    """
    Execute one configured command and write its manifest

    Returns
    -------
    report : dict

    manifest : RunManifest
    """
    manifest = RunManifest.for_config(cfg, __version__)
    out = Output(cfg.output, cfg.format, manifest)
    out.report(to_mapping(cfg), 'config.json')
    report = HANDLERS[cfg.command](cfg, out, **kwargs)
    manifest.write(out.root)
    return report, manifest


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose, args.log_file)
    kwargs = dict(shots=args.shots) if args.command == 'fit' else dict()
    try:
        cfg = resolve_config(args)
        run(cfg, **kwargs)
    except VLSNullException as exc:
        code = exit_code(exc)
        logger.error("%s failed: %s", args.command, exc)
        return code
    except ValueError as exc:
        logger.error("%s rejected its parameters: %s", args.command, exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
