"""
kerrvac computes the photon pairs that refractive index perturbations
create out of the quantum vacuum of a dielectric, from a run configuration
"""
import os
import sys
import traceback
from argparse import ArgumentParser, FileType, RawDescriptionHelpFormatter

import kerrvac
from kerrvac.analogue import (
    CONSTANTS, crossing_speed, horizon_report, unruh_rate_estimate,
    unruh_temperature,
)
from kerrvac.exceptions import EarlyExitError, KerrvacError
from kerrvac.profiles import PulseProfile, asymptotic_regime, validate_profile
from kerrvac.radiation import (
    ORACLE_RELATIVE, ORACLE_STANDARD_ERRORS, PairMode, emission_rate,
    emission_report, mc_oracle, monopole_energy_estimate, pair_amplitude_sq,
    total_probability, write_histogram_csv,
)
from kerrvac.scaling import (
    fit_exponent, make_verdict, run_sweep, write_sweep_csv
)
from kerrvac.scripts import utilities as cli_utils
from kerrvac.spectrum import (
    CSV_POINT_LIMIT, PARSEVAL_TOLERANCE, GridSpec, analytic_spectrum,
    closed_form_error, hermitian_error, moving_spectrum, numeric_spectrum,
    parseval_check, spectrum_of, write_commented_csv, write_grid_binary,
    write_grid_csv,
)


# Seed of the validate oracle check when the config sets none
SELFTEST_SEED = 20240917
SELFTEST_SAMPLES = 2 ** 19
HORIZON_HEADER = ('position', 'kind', 'kappa', 'temperature')


def _wants_csv(config):
    return 'csv' in config.output['formats']


def _profile(config, logger):
    p = cli_utils.build_profile(config)
    return p, validate_profile(p, logger)


def make_spectrum(config, outdir, digest, logger):
    """
    Grid transform of a static profile, with its integrity checks
    """
    p, warnings = _profile(config, logger)
    grid = cli_utils.build_grid(config)
    s = numeric_spectrum(p, grid, logger=logger)
    result = {
        'kind': s.kind,
        'points': list(grid.points),
        'extent': list(grid.extent),
        'convention': s.convention_tag,
        'peak': s.peak,
        'hermitian_error': hermitian_error(s),
        'parseval_discrepancy': parseval_check(p, s, logger),
        'closed_form_error': (
            closed_form_error(s) if p.envelope == 'gaussian' else None
        ),
        'metadata': dict(s.metadata),
        'warnings': warnings,
    }
    write_grid_binary(os.path.join(outdir, 'spectrum.bin'), s, digest)
    if _wants_csv(config) and s.values.size <= CSV_POINT_LIMIT:
        write_grid_csv(os.path.join(outdir, 'spectrum.csv'), s, digest)
    elif _wants_csv(config):
        logger.info(
            'spectrum.csv skipped: {n} points exceed {m}'.format(
                n=s.values.size, m=CSV_POINT_LIMIT
            )
        )
    return result, 0


def make_emission(config, outdir, digest, logger):
    """
    Total probability, energies and distributions of a static profile
    """
    p, warnings = _profile(config, logger)
    integrator = cli_utils.build_integrator(config)
    s = spectrum_of(p, cli_utils.build_grid(config), logger=logger)
    report = emission_report(
        s, spec=integrator,
        angular_bins=config.output['angular_bins'],
        correlation_bins=config.output['correlation_bins'],
        logger=logger,
    )
    result = report.to_dict()
    result['regime'] = asymptotic_regime(p)
    result['warnings'] = warnings + result['warnings']
    if result['regime'] == 'point_like':
        result['monopole_energy_estimate'] = monopole_energy_estimate(p, logger=logger)
    if _wants_csv(config):
        write_histogram_csv(
            os.path.join(outdir, 'angular.csv'), report.angular_histogram, digest
        )
        write_histogram_csv(
            os.path.join(outdir, 'correlation.csv'), report.correlation_histogram, digest
        )
    return result, 0


def make_rate(config, outdir, digest, logger):
    """
    Emission rate of a uniformly moving pulse
    """
    p, warnings = _profile(config, logger)
    fs = moving_spectrum(p, cli_utils.build_grid(config))
    report = emission_rate(
        fs, spec=cli_utils.build_integrator(config),
        bins=config.output['angle_bins'], logger=logger,
    )
    result = report.to_dict()
    result['warnings'] = warnings
    if report.reason:
        logger.info('Rate is 0: {r}'.format(r=report.reason))
    if _wants_csv(config) and report.angle_table is not None:
        write_histogram_csv(os.path.join(outdir, 'angles.csv'), report.angle_table, digest)
    return result, 0


def make_sweep(config, outdir, digest, logger):
    """
    Sweep, fit and verdict against the predicted exponent
    """
    spec = cli_utils.build_sweep(config)
    table = run_sweep(spec, logger=logger)
    fit = fit_exponent(table)
    verdict = make_verdict(
        spec.regime, spec.observable, spec.parameter, fit,
        deterministic=spec.deterministic,
    )
    level = logger.info if verdict['pass'] else logger.warning
    level(
        'Exponent of {o} in {p}: {f:.4f} +/- {e:.2g}, expected {x}: {v}'.format(
            o=spec.observable, p=spec.parameter, f=fit.exponent, e=fit.stderr,
            x=verdict['expected'], v='pass' if verdict['pass'] else 'fail',
        ),
        context_dict=verdict,
    )
    write_sweep_csv(os.path.join(outdir, 'sweep.csv'), table, fit, digest)
    cli_utils.write_json(
        os.path.join(outdir, 'verdict.json'),
        dict(verdict, config_hash=digest, tool_version=kerrvac.__version__),
    )
    result = {
        'regime': spec.regime,
        'observable': spec.observable,
        'parameter': spec.parameter,
        'table': [row._asdict() for row in table],
        'fit': fit.to_dict(),
        'verdict': verdict,
    }
    return result, 0


def make_horizons(config, outdir, digest, logger):
    """
    Horizons, temperatures and the Hawking rate estimate of a moving pulse
    """
    p, warnings = _profile(config, logger)
    values = config.horizon
    v = values['v']
    if v is None and values['crossing'] is not None:
        v = crossing_speed(p, values['crossing'])
    report = horizon_report(
        p, v=v, area=values['area'], dimension=values['dimension'],
        method=values['method'], logger=logger,
    )
    result = report.to_dict()
    result['warnings'] = warnings + result['warnings']
    if _wants_csv(config):
        rows = [(h.position, h.kind, h.kappa, h.temperature) for h in report.horizons]
        write_commented_csv(
            os.path.join(outdir, 'horizons.csv'), HORIZON_HEADER, rows, digest
        )
    return result, 0


def make_unruh(config, outdir, digest, logger):
    """
    Unruh temperature and rate estimate of an accelerated pulse
    """
    p, _ = _profile(config, logger)
    values = config.unruh
    report = unruh_rate_estimate(
        p, time=values['time'],
        reference_frequency=config.run['reference_frequency'],
        medium_frame=values['medium_frame'], logger=logger,
    )
    result = report.to_dict()
    a = values['si_acceleration']
    if a is not None:
        temperature = unruh_temperature(
            a, si=True, n0=p.n0 if values['medium_frame'] else None
        )
        result['si'] = {
            'acceleration': a,
            'temperature_kelvin': temperature.kelvin,
            'constants': dict(CONSTANTS),
        }
    return result, 0


def _check(name, value, limit, passed=None):
    return {
        'name': name,
        'value': value,
        'limit': limit,
        'pass': bool(value <= limit) if passed is None else bool(passed),
    }


def self_tests(config, logger):
    """
    Parseval, symmetry and oracle checks on reference pulses

    :rtype: List[dict]
    """
    checks = []
    reference = PulseProfile.one_parameter(1.0, 0.01)
    grid = numeric_spectrum(reference, GridSpec(points=40), logger=logger)
    checks.append(_check('fft_closed_form', closed_form_error(grid), 1e-6))
    checks.append(_check('parseval', parseval_check(reference, grid, logger), PARSEVAL_TOLERANCE))
    checks.append(_check('hermitian', hermitian_error(grid), 1e-12))

    s = analytic_spectrum(reference.replace(delta_n=0.05))
    mode = PairMode((0.3, -0.2, 0.5), (-0.4, 0.1, 0.2))
    a, b = pair_amplitude_sq(s, mode), pair_amplitude_sq(s, mode.swapped())
    checks.append(_check('pair_swap_symmetry', abs(a - b) / a, 1e-12))

    probability = total_probability(s, logger=logger)
    double = total_probability(analytic_spectrum(reference.replace(delta_n=0.1)), logger=logger)
    checks.append(_check('quadratic_law', abs(double.value / probability.value - 4.0), 1e-6))

    integrator = config.integrator
    seed = integrator['seed'] if integrator['seed'] is not None else SELFTEST_SEED
    mc = mc_oracle(
        s, seed=seed, n_samples=SELFTEST_SAMPLES, observable='P',
        workers=integrator['workers'], logger=logger,
    )
    deviation = abs(mc.value - probability.value)
    checks.append(_check(
        'oracle_probability', deviation / probability.value, ORACLE_RELATIVE,
        passed=(
            deviation <= ORACLE_STANDARD_ERRORS * mc.error
            and deviation <= ORACLE_RELATIVE * probability.value
        ),
    ))

    slow = PulseProfile.moving(1.0, (0.9 / 1.5, 0.0, 0.0), 0.05, n0=1.5)
    rate = emission_rate(moving_spectrum(slow), logger=logger).rate
    checks.append(_check('subluminal_rate', rate, 0.0, passed=rate == 0.0))
    return checks


def make_validation(config, outdir, digest, logger):
    """
    Run the self-tests and report a summary; failing checks exit with 1
    """
    warnings = []
    if config.profile['variant'] is not None:
        _, warnings = _profile(config, logger)
    checks = self_tests(config, logger)
    failed = [c['name'] for c in checks if not c['pass']]
    for check in checks:
        level = logger.info if check['pass'] else logger.error
        level(
            'Self-test {n}: {r}'.format(n=check['name'], r='pass' if check['pass'] else 'FAIL'),
            context_dict=check,
        )
    result = {
        'checks': checks,
        'passed': len(checks) - len(failed),
        'failed': failed,
        'warnings': warnings,
    }
    if _wants_csv(config):
        write_commented_csv(
            os.path.join(outdir, 'checks.csv'), ('name', 'value', 'limit', 'pass'),
            [(c['name'], c['value'], c['limit'], c['pass']) for c in checks], digest,
        )
    return result, 1 if failed else 0


COMMANDS = {
    'spectrum': make_spectrum,
    'radiate': make_emission,
    'rate': make_rate,
    'sweep': make_sweep,
    'horizon': make_horizons,
    'unruh': make_unruh,
    'validate': make_validation,
}


def execute(config, logger):
    """
    Run the command of a validated config and write its report.json
    next to the command's other files

    :type config: RunConfig
    :param config: The run configuration
    :type logger: logging.LoggerAdapter
    :param logger: Where progress goes
    :rtype: int
    :returns: The exit status
    """
    outdir = cli_utils.output_directory(config)
    os.makedirs(outdir, exist_ok=True)
    digest = cli_utils.config_hash(config)
    logger.info(
        'Running {c} into {o}'.format(c=config.command, o=outdir),
        context_dict={'config_hash': digest},
    )
    result, status = COMMANDS[config.command](config, outdir, digest, logger)
    sections = {
        section: {
            option: value for option, value in values.items()
            if '{s}.{o}'.format(s=section, o=option) not in cli_utils.HASH_EXCLUDE
        }
        for section, values in config.sections()
    }
    cli_utils.write_json(
        os.path.join(outdir, 'report.json'),
        {
            'command': config.command,
            'config_hash': digest,
            'tool_version': kerrvac.__version__,
            'config': sections,
            'result': result,
        },
    )
    logger.info('Wrote {f}'.format(f=os.path.join(outdir, 'report.json')))
    return status


def write_error(outdir, excp, digest=None, debug=False):
    """
    Write error.json describing why a run stopped
    """
    data = {
        'error': type(excp).__name__,
        'message': str(excp),
        'context': dict(getattr(excp, 'context_dict', None) or {}),
        'config_hash': digest,
        'tool_version': kerrvac.__version__,
    }
    if debug:
        data['traceback'] = traceback.format_exception(type(excp), excp, excp.__traceback__)
    try:
        return cli_utils.write_json(os.path.join(outdir, 'error.json'), data)
    except OSError:
        return None


def main():
    """
    Entry point
    """
    parser = ArgumentParser(
        description=__doc__,
        formatter_class=RawDescriptionHelpFormatter,
        allow_abbrev=False,
        epilog=cli_utils.CLI_MAIN_EPILOG,
        prog='kerrvac',
    )
    parser.add_argument(
        '--quiet', '-Q',
        help='Only print error messages to standard streams.',
        action='store_false',
        dest='verbose',
    )
    parser.add_argument(
        '--debug', '-B',
        help='Show the stacktrace if kerrvac stops because of a fatal error',
        action='store_true',
    )
    parser.add_argument(
        '--log-file', '-L',
        help='Log file to use when kerrvac prints messages. Default: stdout',
        type=FileType('a'),
        default=sys.stdout,
    )
    parser.add_argument(
        '--log-format',
        help='Format the log messages as json or text. Default: %(default)s',
        choices=['json', 'text'],
        default='json',
    )
    parser.add_argument(
        '--version', '-v',
        action='version',
        version='%(prog)s {v}'.format(v=kerrvac.__version__)
    )
    subparsers = parser.add_subparsers(
        description='Choose a subcommand to carry out a task with kerrvac',
        dest='command',
        metavar='subcommand',
    )
    subparsers.required = True
    helps = {
        'spectrum': 'Grid Fourier transform of a static profile',
        'radiate': 'Photon pairs emitted by a static profile',
        'rate': 'Emission rate of a uniformly moving pulse',
        'sweep': 'Sweep a parameter and fit the power law of an observable',
        'horizon': 'Horizons and Hawking estimates of a moving pulse',
        'unruh': 'Unruh temperature and rate of an accelerated pulse',
        'validate': 'Run the self-test suite',
    }
    for command in cli_utils.COMMANDS:
        sub = subparsers.add_parser(
            command, help=helps[command], description=helps[command],
            allow_abbrev=False,
        )
        sub.set_defaults(command=command)
        sub.add_argument(
            '--config', '-c',
            help='The INI run configuration',
            required=True,
        )
        sub.add_argument(
            '--out', '-o',
            help=(
                'Output directory. Default: [output] directory, then ${e}, '
                'then {d}'.format(e=cli_utils.ENV_OUTPUT_DIR, d=cli_utils.DEFAULT_OUTPUT_DIR)
            ),
        )
        sub.add_argument(
            '--seed', '-s',
            help='Monte-Carlo seed, overriding [integrator] seed',
            type=int,
        )
        sub.add_argument(
            '--workers', '-j',
            help='Worker processes, overriding [integrator] workers',
            type=int,
        )
    args = parser.parse_args()
    logger = cli_utils.make_logger(
        verbose=args.verbose,
        stream=args.log_file,
        json_format=args.log_format == 'json',
        debug=args.debug,
    )
    outdir = args.out or os.environ.get(cli_utils.ENV_OUTPUT_DIR) or cli_utils.DEFAULT_OUTPUT_DIR
    digest = None
    try:
        config = cli_utils.load_config(
            args.config, command=args.command, out=args.out, seed=args.seed,
            workers=args.workers,
        )
        outdir = cli_utils.output_directory(config)
        digest = cli_utils.config_hash(config)
        return execute(config, logger)
    except (KeyboardInterrupt, EarlyExitError) as excp:
        logger.error('Interrupted by the user')
        write_error(outdir, excp, digest)
        return 1
    except Exception as excp:
        msg = str(excp)
        if args.debug:
            _, _, tb = sys.exc_info()
            traces = [msg]
            traces += map(str.strip, traceback.format_tb(tb))
            msg = '\n'.join(traces)
        context = getattr(excp, 'context_dict', None) if isinstance(excp, KerrvacError) else None
        logger.error(msg, context_dict=dict(context or {}, error=type(excp).__name__))
        write_error(outdir, excp, digest, args.debug)
        return 1


if __name__ == '__main__':
    sys.exit(main())
