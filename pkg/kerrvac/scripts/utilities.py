"""
Utility functions for the kerrvac CLI tool: the run configuration
schema, its parser and canonical form, and the logger factory
"""
import configparser
import hashlib
import json
import logging
import math
import os
import socket
import sys
from dataclasses import dataclass, fields, replace

import numpy as np
from jinja2 import Environment

from kerrvac import __version__
from kerrvac.exceptions import (
    ConfigSchemaError, ConfigSyntaxError, ConfigValidationError, KerrvacError
)
from kerrvac.profiles import (
    ACCELERATED, MOVING, STATIC, TRAJECTORY_KINDS, PulseProfile, Trajectory,
)
from kerrvac.radiation import MONTECARLO, IntegratorSpec
from kerrvac.scaling import SweepSpec, geometric_grid
from kerrvac.spectrum import DEFAULT_POINTS, MIN_EXTENT, GridSpec


CLI_MAIN_EPILOG = """
RETURN CODES:
    kerrvac returns 0 on success and 1 when the configuration is invalid,
    a computation fails or, for kerrvac validate, any self-test fails.
    Failures also leave an error.json file in the output directory.

CONFIGURATION:
    Every command reads an INI file given with --config. Option names are
    case insensitive and dashes count as underscores. Unknown sections and
    options are errors. Vectors and lists are comma separated.
    Natural units are used throughout: the vacuum light speed is 1 and
    frequencies are in units of a reference frequency.

        [run]
        schema_version = 1
        # optional; the command given on the command line must match it
        command = radiate
        # rad/s; only needed for Kelvin temperatures
        reference_frequency = 2.4e15

        [profile]
        # static, moving or accelerated
        variant = static
        delta_n = 0.05
        n0 = 1.5
        # gaussian or sech
        envelope = gaussian
        omega1 = 1.0
        omega2 = 1.0
        omega3 = 1.0
        # moving and accelerated pulses use omega and either
        # velocity = 1.2, 0, 0
        # or a trajectory:
        # trajectory = uniform_acceleration
        # acceleration = 0.1, 0, 0

        [integrator]
        # quadrature or montecarlo
        method = quadrature
        tolerance = 1e-3
        seed = 20240917
        workers = 1

        [output]
        directory = results
        # json reports are always written; csv adds the tables
        formats = json, csv

        [sweep]
        parameter = omega2
        values = 0.01, 0.02, 0.04, 0.08
        observable = P

    The [spectrum] section sets the lattice (points, extent), [horizon] the
    horizon search (v or crossing, area, dimension, method) and [unruh]
    the Unruh estimate (time, medium_frame, si_acceleration).

ENVIRONMENT:
    KERRVAC_OUTPUT_DIR is the output directory when neither --out nor
    [output] directory is given.

EXAMPLES:
    kerrvac radiate --config isotropic.ini --out results/
    kerrvac sweep --config cosmological.ini --workers 4
    kerrvac rate --config cherenkov.ini --seed 7
    kerrvac validate --config selftest.ini
"""
SCHEMA_VERSION = 1
COMMANDS = ('spectrum', 'radiate', 'rate', 'sweep', 'horizon', 'unruh', 'validate')
ENV_OUTPUT_DIR = 'KERRVAC_OUTPUT_DIR'
DEFAULT_OUTPUT_DIR = 'kerrvac-output'
FORMATS = ('json', 'csv')
VARIANT_NAMES = {
    'static': STATIC, STATIC: STATIC,
    'moving': MOVING, MOVING: MOVING,
    'accelerated': ACCELERATED,
}
COMMAND_VARIANTS = {
    'spectrum': (STATIC,),
    'radiate': (STATIC,),
    'rate': (MOVING,),
    'horizon': (MOVING,),
    'unruh': (ACCELERATED,),
}
# Options that never change a result and stay out of the config hash
HASH_EXCLUDE = ('integrator.workers', 'output.directory')


def _text(config, section, option):
    return config.get(section, option).strip()


def get_string(config, section, option):
    return _text(config, section, option) or None


def get_int(config, section, option):
    if not _text(config, section, option):
        return None
    return config.getint(section, option)


def get_float(config, section, option):
    if not _text(config, section, option):
        return None
    value = config.getfloat(section, option)
    if not math.isfinite(value):
        raise ValueError('{v} is not a finite number'.format(v=value))
    return value


def get_boolean(config, section, option):
    if not _text(config, section, option):
        return None
    return config.getboolean(section, option)


def _items(config, section, option):
    return [v.strip() for v in _text(config, section, option).split(',') if v.strip()]


def get_floats(config, section, option):
    items = _items(config, section, option)
    if not items:
        return None
    values = tuple(float(v) for v in items)
    if not all(map(math.isfinite, values)):
        raise ValueError('expected finite numbers')
    return values


def get_ints(config, section, option):
    items = _items(config, section, option)
    return tuple(int(v) for v in items) if items else None


def get_vector(config, section, option):
    values = get_floats(config, section, option)
    if values is not None and len(values) != 3:
        raise ValueError('expected 3 comma separated numbers, got {n}'.format(n=len(values)))
    return values


def get_names(config, section, option):
    items = _items(config, section, option)
    return tuple(v.lower() for v in items) if items else None


CONFIGS = {
    'run': (
        ('schema_version', get_int),
        ('command', get_string),
        ('reference_frequency', get_float),
    ),
    'profile': (
        ('variant', get_string),
        ('delta_n', get_float),
        ('n0', get_float),
        ('envelope', get_string),
        ('kerr_n2', get_float),
        ('omega', get_float),
        ('omega1', get_float),
        ('omega2', get_float),
        ('omega3', get_float),
        ('velocity', get_vector),
        ('t0', get_float),
        ('r0', get_vector),
        ('trajectory', get_string),
        ('trajectory_r0', get_vector),
        ('trajectory_v0', get_vector),
        ('acceleration', get_vector),
        ('times', get_floats),
        ('positions', get_floats),
    ),
    'integrator': (
        ('method', get_string),
        ('tolerance', get_float),
        ('max_evaluations', get_int),
        ('nodes', get_int),
        ('samples', get_int),
        ('batch_size', get_int),
        ('seed', get_int),
        ('workers', get_int),
    ),
    'output': (
        ('directory', get_string),
        ('formats', get_names),
        ('angular_bins', get_int),
        ('correlation_bins', get_int),
        ('angle_bins', get_int),
    ),
    'sweep': (
        ('parameter', get_string),
        ('observable', get_string),
        ('regime', get_string),
        ('values', get_floats),
        ('start', get_float),
        ('stop', get_float),
        ('points', get_int),
        ('crossing', get_float),
    ),
    'spectrum': (
        ('points', get_ints),
        ('extent', get_floats),
    ),
    'horizon': (
        ('v', get_float),
        ('crossing', get_float),
        ('area', get_float),
        ('dimension', get_int),
        ('method', get_string),
    ),
    'unruh': (
        ('time', get_float),
        ('medium_frame', get_boolean),
        ('si_acceleration', get_float),
    ),
}
DEFAULTS = {
    'profile': {
        'n0': 1.0, 'envelope': 'gaussian', 't0': 0.0, 'r0': (0.0, 0.0, 0.0),
        'trajectory_r0': (0.0, 0.0, 0.0), 'trajectory_v0': (0.0, 0.0, 0.0),
        'acceleration': (0.0, 0.0, 0.0),
    },
    'integrator': {
        'method': 'quadrature', 'tolerance': 1e-3, 'max_evaluations': 2 ** 26,
        'nodes': 48, 'samples': 2 ** 18, 'batch_size': 2 ** 14, 'workers': 1,
    },
    'output': {
        'formats': FORMATS, 'angular_bins': 12, 'correlation_bins': 20,
        'angle_bins': 360,
    },
    'sweep': {'observable': 'P', 'crossing': 0.5},
    'spectrum': {'points': (DEFAULT_POINTS,), 'extent': (MIN_EXTENT,)},
    'horizon': {'dimension': 3, 'method': 'analytic'},
    'unruh': {'medium_frame': False},
}
SECTIONS = tuple(CONFIGS)

CANONICAL_TEMPLATE = """
{%- for section, options in sections %}
[{{ section }}]
{%- for name, value in options %}
{{ name }} ={% if value %} {{ value }}{% endif %}
{%- endfor %}
{% endfor %}"""


@dataclass(frozen=True)
class RunConfig:
    """
    A validated run configuration: one dict of typed option values per
    section, defaults filled in and unset options None
    """
    run: dict
    profile: dict
    integrator: dict
    output: dict
    sweep: dict
    spectrum: dict
    horizon: dict
    unruh: dict

    @property
    def command(self):
        return self.run['command']

    def sections(self):
        return tuple((f.name, getattr(self, f.name)) for f in fields(self))


def _new_parser():
    config = configparser.ConfigParser(
        interpolation=None, default_section='kerrvac:no-defaults',
    )
    config.optionxform = lambda s: s.lstrip('-').lower().replace('-', '_')
    return config


def _column(lines, lineno):
    if not lineno or lineno > len(lines):
        return 1
    line = lines[lineno - 1]
    return len(line) - len(line.lstrip()) + 1


def _read(text):
    config = _new_parser()
    lines = text.splitlines()
    try:
        config.read_string(text, source='<config>')
    except configparser.MissingSectionHeaderError as excp:
        lineno = excp.lineno
        msg = 'Line {l}: options must follow a [section] header'
    except configparser.ParsingError as excp:
        lineno = excp.errors[0][0] if excp.errors else None
        msg = 'Line {l}: expected "option = value"'
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as excp:
        lineno = excp.lineno
        msg = 'Line {{l}}: {e}'.format(e=excp.message.replace('{', '{{').replace('}', '}}'))
    else:
        return config
    column = _column(lines, lineno)
    raise ConfigSyntaxError(
        msg.format(l=lineno), context_dict={'line': lineno, 'column': column},
    )


def _parse(text, command=None):
    """
    RunConfig of the INI text, checked against the schema only
    """
    config = _read(text)
    for section in config.sections():
        if section not in CONFIGS:
            raise ConfigSchemaError(
                'Unknown section [{s}]. Expected one of {c}'.format(
                    s=section, c=', '.join(SECTIONS)
                ),
                context_dict={'key': section},
            )
        known = {name for name, _ in CONFIGS[section]}
        for option in config.options(section):
            if option not in known:
                raise ConfigSchemaError(
                    'Unknown option {s}.{o}'.format(s=section, o=option),
                    context_dict={'key': '{s}.{o}'.format(s=section, o=option)},
                )
    values = {}
    for section, options in CONFIGS.items():
        out = {}
        for option, getter in options:
            default = DEFAULTS.get(section, {}).get(option)
            if not config.has_option(section, option):
                out[option] = default
                continue
            try:
                value = getter(config, section, option)
            except ValueError as excp:
                key = '{s}.{o}'.format(s=section, o=option)
                raise ConfigValidationError(
                    'Invalid value for {k}: {e}'.format(k=key, e=excp),
                    context_dict={'key': key},
                ) from None
            out[option] = default if value is None else value
        values[section] = out
    run = values['run']
    if command is not None:
        if run['command'] is not None and run['command'] != command:
            raise ConfigValidationError(
                'The config is for {a}, not {b}'.format(a=run['command'], b=command),
                context_dict={'key': 'run.command'},
            )
        run['command'] = command
    return RunConfig(**values)


def parse_config(text, command=None):
    """
    Parse and validate the INI text of a run configuration

    :type text: str
    :param text: Configuration file contents
    :type command: Union[str, None]
    :param command: Command given on the command line; it must agree
        with [run] command when both are set
    :rtype: RunConfig
    :raises: ConfigSyntaxError, ConfigSchemaError, ConfigValidationError
    """
    return validate_config(_parse(text, command))


def load_config(fname, command=None, out=None, seed=None, workers=None):
    """
    Read a config file and apply the command line overrides
    """
    fname = os.path.expanduser(fname)
    try:
        with open(fname) as fh:
            text = fh.read()
    except OSError as excp:
        raise ConfigSyntaxError(
            'Cannot read the config file {f}: {e}'.format(f=fname, e=excp),
            context_dict={'file': fname},
        ) from None
    config = _parse(text, command=command)
    return apply_overrides(config, out=out, seed=seed, workers=workers)


def apply_overrides(config, out=None, seed=None, workers=None):
    """
    The config with the output directory, seed and worker count of the
    command line in place of the file's
    """
    integrator = dict(config.integrator)
    output = dict(config.output)
    if seed is not None:
        integrator['seed'] = seed
    if workers is not None:
        integrator['workers'] = workers
    if out is not None:
        output['directory'] = out
    return validate_config(replace(config, integrator=integrator, output=output))


def _invalid(key, excp):
    return ConfigValidationError(
        '{k}: {e}'.format(k=key, e=excp),
        context_dict=dict(getattr(excp, 'context_dict', {}) or {}, key=key),
    )


def _require(section, values, *options):
    for option in options:
        if values.get(option) is None:
            key = '{s}.{o}'.format(s=section, o=option)
            raise ConfigValidationError(
                'Missing option {k}'.format(k=key), context_dict={'key': key},
            )


def build_trajectory(values):
    kind = values['trajectory']
    if kind not in TRAJECTORY_KINDS:
        raise ConfigValidationError(
            'profile.trajectory must be one of {c}'.format(c=', '.join(TRAJECTORY_KINDS)),
            context_dict={'key': 'profile.trajectory'},
        )
    if kind == 'tabulated':
        _require('profile', values, 'times', 'positions')
        positions = np.asarray(values['positions'], dtype=float)
        if positions.size % 3:
            raise ConfigValidationError(
                'profile.positions must hold 3 numbers per sample',
                context_dict={'key': 'profile.positions'},
            )
        return Trajectory.tabulated(values['times'], positions.reshape(-1, 3))
    if kind == 'uniform_velocity':
        return Trajectory.uniform_velocity(values['trajectory_v0'], r0=values['trajectory_r0'])
    return Trajectory.uniform_acceleration(
        values['acceleration'], v0=values['trajectory_v0'], r0=values['trajectory_r0'],
    )


def build_profile(config):
    """
    The PulseProfile of the [profile] section

    :rtype: PulseProfile
    :raises: ConfigValidationError
    """
    values = config.profile
    _require('profile', values, 'variant', 'delta_n')
    variant = VARIANT_NAMES.get(values['variant'].lower())
    if variant is None:
        raise ConfigValidationError(
            'profile.variant must be one of static, moving, accelerated',
            context_dict={'key': 'profile.variant'},
        )
    common = dict(
        delta_n=values['delta_n'], n0=values['n0'], envelope=values['envelope'],
        kerr_n2=values['kerr_n2'],
    )
    try:
        if variant == STATIC:
            omega = values['omega']
            rates = [values[k] if values[k] is not None else omega for k in ('omega1', 'omega2', 'omega3')]
            if None in rates:
                _require('profile', values, 'omega1', 'omega2', 'omega3')
            return PulseProfile.static(
                *rates, t0=values['t0'], r0=values['r0'], **common
            )
        _require('profile', values, 'omega')
        if variant == MOVING:
            _require('profile', values, 'velocity')
            return PulseProfile.moving(
                values['omega'], values['velocity'], r0=values['r0'], **common
            )
        _require('profile', values, 'trajectory')
        return PulseProfile.accelerated(
            values['omega'], build_trajectory(values), **common
        )
    except ConfigValidationError:
        raise
    except KerrvacError as excp:
        raise _invalid('profile', excp) from None


def build_integrator(config):
    try:
        return IntegratorSpec(**config.integrator)
    except KerrvacError as excp:
        raise _invalid('integrator', excp) from None


def build_grid(config):
    values = config.spectrum
    points, extent = values['points'], values['extent']
    try:
        return GridSpec(
            points=points[0] if len(points) == 1 else points,
            extent=extent[0] if len(extent) == 1 else extent,
        )
    except KerrvacError as excp:
        raise _invalid('spectrum', excp) from None


def sweep_values(config):
    values = config.sweep
    if values['values'] is not None:
        return values['values']
    _require('sweep', values, 'start', 'stop', 'points')
    try:
        return geometric_grid(values['start'], values['stop'], values['points'])
    except KerrvacError as excp:
        raise _invalid('sweep', excp) from None


def build_sweep(config, profile=None, integrator=None):
    """
    The SweepSpec of the [sweep] section, swept on the [profile] template
    """
    _require('sweep', config.sweep, 'parameter')
    profile = profile or build_profile(config)
    integrator = integrator or build_integrator(config)
    values = config.sweep
    try:
        return SweepSpec(
            template=profile,
            parameter=values['parameter'],
            values=sweep_values(config),
            observable=values['observable'],
            regime=values['regime'],
            integrator=integrator,
            crossing=values['crossing'],
            workers=integrator.workers,
            grid=build_grid(config),
        )
    except ConfigValidationError:
        raise
    except KerrvacError as excp:
        raise _invalid('sweep', excp) from None


def validate_config(config):
    """
    Check the cross-option rules of a run configuration

    :rtype: RunConfig
    :returns: The config itself
    :raises: ConfigValidationError
    """
    run = config.run
    if run['schema_version'] is None:
        raise ConfigValidationError(
            'Missing option run.schema_version', context_dict={'key': 'run.schema_version'},
        )
    if run['schema_version'] != SCHEMA_VERSION:
        raise ConfigValidationError(
            'Unsupported schema version {v}; this is kerrvac {t} with schema '
            'version {s}'.format(v=run['schema_version'], t=__version__, s=SCHEMA_VERSION),
            context_dict={'key': 'run.schema_version'},
        )
    if config.command not in COMMANDS:
        raise ConfigValidationError(
            'The command must be one of {c}, got {g}'.format(
                c=', '.join(COMMANDS), g=config.command
            ),
            context_dict={'key': 'run.command'},
        )
    integrator = build_integrator(config)
    if integrator.method == MONTECARLO and integrator.seed is None:
        raise ConfigValidationError(
            'The montecarlo method needs a seed', context_dict={'key': 'integrator.seed'},
        )
    unknown = set(config.output['formats']) - set(FORMATS)
    if unknown:
        raise ConfigValidationError(
            'Unknown output formats {u}'.format(u=', '.join(sorted(unknown))),
            context_dict={'key': 'output.formats'},
        )
    for option in ('angular_bins', 'correlation_bins', 'angle_bins'):
        if config.output[option] < 1:
            key = 'output.{o}'.format(o=option)
            raise ConfigValidationError(
                '{k} must be positive'.format(k=key), context_dict={'key': key},
            )
    build_grid(config)
    horizon = config.horizon
    if horizon['dimension'] not in (1, 3):
        raise ConfigValidationError(
            'horizon.dimension must be 1 or 3', context_dict={'key': 'horizon.dimension'},
        )
    if horizon['method'] not in ('analytic', 'finite_difference'):
        raise ConfigValidationError(
            'horizon.method must be analytic or finite_difference',
            context_dict={'key': 'horizon.method'},
        )
    if config.command == 'validate' and config.profile['variant'] is None:
        return config
    profile = build_profile(config)
    allowed = COMMAND_VARIANTS.get(config.command)
    if allowed and profile.variant not in allowed:
        raise ConfigValidationError(
            '{c} needs a {a} profile, got {v}'.format(
                c=config.command, a=' or '.join(allowed), v=profile.variant
            ),
            context_dict={'key': 'profile.variant'},
        )
    if config.command == 'sweep':
        build_sweep(config, profile, integrator)
    return config


def _render(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ', '.join(_render(v) for v in value)
    return str(value)


def canonical_config(config, exclude=()):
    """
    Every option of a config, defaults included, in a fixed order.
    parse_config reads the text back into an equal RunConfig.

    :type config: RunConfig
    :type exclude: Iterable[str]
    :param exclude: section.option keys to leave out
    :rtype: str
    """
    exclude = set(exclude)
    sections = []
    for section, values in config.sections():
        options = [
            (option, _render(values[option]))
            for option, _ in CONFIGS[section]
            if '{s}.{o}'.format(s=section, o=option) not in exclude
        ]
        sections.append((section, options))
    template = Environment().from_string(CANONICAL_TEMPLATE)
    return template.render(sections=sections).lstrip('\n')


def config_hash(config):
    """
    sha256 of the canonical config without the options in HASH_EXCLUDE
    """
    text = canonical_config(config, exclude=HASH_EXCLUDE)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def output_directory(config):
    return (
        config.output['directory'] or os.environ.get(ENV_OUTPUT_DIR)
        or DEFAULT_OUTPUT_DIR
    )


def to_jsonable(value):
    """
    Plain JSON types for a report, non-finite numbers as null
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(fname, data):
    """
    Write data as sorted, indented JSON so reruns give identical bytes
    """
    dirname = os.path.dirname(fname)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(fname, 'w') as fh:
        json.dump(to_jsonable(data), fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write('\n')
    return fname


class _HostnameFilter(logging.Filter):
    """
    Give records logged straight through the package logger the
    hostname field the formatter expects
    """
    def filter(self, record):
        if not hasattr(record, 'hostname'):
            record.hostname = socket.gethostname()
        return True


def make_logger(user='KERRVAC', verbose=True, stream=None, json_format=True, debug=False):
    """
    Create a Logger object pointing to the given stream

    :type verbose: bool
    :param verbose: If True, log level is INFO. Otherwise, it's WARN
    :type stream: Union[TextIOWrapper,None]
    :param stream: A file object opened for writing
    :type json_format: bool
    :param json_format: Whether or not to show log messages as JSON
    :type debug: bool
    :param debug: Log at DEBUG level
    :rtype: logging.LoggerAdapter
    :returns: Returns a LoggerAdapter object used to print messages
    """
    if stream is None:
        stream = sys.stdout
    if not hasattr(stream, 'write'):
        stream = open(stream, 'a')
    level = logging.DEBUG if debug else (logging.INFO if verbose else logging.WARN)
    formatter = logging.Formatter(
        '%(asctime)s:%(hostname)s:%(levelname)s:%(name)s:%(message)s',
        '%Y-%m-%d %H:%M:%S%z'
    )
    logger = logging.getLogger(user.upper())
    logger.setLevel(level)
    for old in list(logger.handlers):
        if old.get_name() == user:
            logger.removeHandler(old)
    handler = logging.StreamHandler(stream=stream)
    handler.setLevel(level)
    handler.set_name(user)
    handler.setFormatter(formatter)
    handler.addFilter(_HostnameFilter())
    logger.addHandler(handler)
    Adapter = JSONLoggerAdapter if json_format else TextLoggerAdapter
    return Adapter(logger, {'hostname': socket.gethostname()})


class JSONLoggerAdapter(logging.LoggerAdapter):
    """
    A LoggerAdapter that converts the message into a JSON record.
    This finds a dict called context_dict in the passed in keywords
    arguments and uses that as a starting dict to eventually convert into
    a JSON string.
    """
    def process(self, msg, kwargs):
        context_dict = dict(kwargs.pop('context_dict', None) or {})
        msg, kwargs = super().process(msg, kwargs)
        context_dict.update(self.extra)
        context_dict['message'] = msg
        return json.dumps(context_dict, default=str), kwargs


class TextLoggerAdapter(logging.LoggerAdapter):
    """
    Pops the context_dict dictionary from the kwargs passed to
    logging.LoggerAdapter.process
    """
    def process(self, msg, kwargs):
        kwargs.pop('context_dict', None)
        return super().process(msg, kwargs)


__all__ = [
    'CLI_MAIN_EPILOG', 'COMMANDS', 'CONFIGS', 'DEFAULTS', 'ENV_OUTPUT_DIR',
    'HASH_EXCLUDE', 'JSONLoggerAdapter', 'RunConfig', 'SCHEMA_VERSION',
    'TextLoggerAdapter', 'apply_overrides', 'build_grid', 'build_integrator',
    'build_profile', 'build_sweep', 'build_trajectory', 'canonical_config',
    'config_hash', 'load_config', 'make_logger', 'output_directory',
    'parse_config', 'sweep_values', 'to_jsonable', 'validate_config',
    'write_json',
]
