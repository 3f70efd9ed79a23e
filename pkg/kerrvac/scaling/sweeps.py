"""
Parameter sweeps and power-law fits.

A sweep evaluates one observable of a profile template along a geometric
grid of one parameter, and fit_exponent reads the exponent off the log-log
data. EXPECTED holds the exponents the asymptotic regimes predict; it is
the only place they are written down.
"""
import logging
import math
import signal
import sys
import traceback
from dataclasses import dataclass, field, replace
from multiprocessing.pool import Pool as ProcessPool
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.stats import linregress

from kerrvac.analogue import crossing_speed, horizon_report, unruh_rate_estimate
from kerrvac.exceptions import (
    EarlyExitError, ExponentLookupError, FitError, KerrvacError, SweepError
)
from kerrvac.profiles import (
    ACCELERATED, MOVING, STATIC, PulseProfile, Trajectory, asymptotic_regime
)
from kerrvac.radiation import (
    MONTECARLO, IntegratorSpec, emission_rate, mean_photon_energy,
    total_energy, total_probability,
)
from kerrvac.spectrum import GridSpec, moving_spectrum, spectrum_of
from kerrvac.spectrum.utilities import write_commented_csv


LOGGER = logging.getLogger('KERRVAC')

PARAMETERS = (
    'omega', 'omega1', 'omega2', 'omega3', 'delta_n', 'v_minus_c',
    'acceleration',
)
STATIC_OBSERVABLES = ('P', 'E', 'total_energy')
MOVING_OBSERVABLES = ('rate', 'rate_energy', 'theta_max')
HORIZON_OBSERVABLES = ('temperature', 'hawking_rate')
UNRUH_OBSERVABLES = ('unruh_rate',)
OBSERVABLES = (
    STATIC_OBSERVABLES + MOVING_OBSERVABLES + HORIZON_OBSERVABLES
    + UNRUH_OBSERVABLES
)
STATIC_REGIMES = ('one_parameter', 'point_like', 'cosmological', 'needle')
MIN_POINTS = 4
# Geometric grids are checked to this relative precision
GRID_RTOL = 1e-6
# Noiseless deterministic sweeps must reach this
MIN_R_SQUARED = 0.999
# max/min of a sweep that should not depend on its parameter
FLATNESS = 1.02
DEFAULT_TOLERANCE = 0.1

# (regime, observable, parameter) -> predicted exponent
EXPECTED = {
    ('one_parameter', 'P', 'omega'): 0.0,
    ('one_parameter', 'E', 'omega'): 1.0,
    ('one_parameter', 'total_energy', 'omega'): 1.0,
    ('one_parameter', 'P', 'delta_n'): 2.0,
    ('point_like', 'P', 'omega1'): 6.0,
    ('point_like', 'P', 'omega2'): -6.0,
    ('point_like', 'E', 'omega1'): 1.0,
    ('point_like', 'total_energy', 'omega1'): 7.0,
    ('point_like', 'total_energy', 'omega2'): -6.0,
    ('point_like', 'P', 'delta_n'): 2.0,
    ('cosmological', 'P', 'omega1'): 3.0,
    ('cosmological', 'P', 'omega2'): -3.0,
    ('cosmological', 'P', 'delta_n'): 2.0,
    ('needle', 'P', 'omega1'): 5.0,
    ('needle', 'P', 'omega2'): -1.0,
    ('needle', 'P', 'omega3'): -4.0,
    ('needle', 'P', 'delta_n'): 2.0,
    ('moving', 'rate', 'omega'): 1.0,
    ('moving', 'rate', 'delta_n'): 2.0,
    ('moving', 'rate_energy', 'omega'): 1.0,
    ('moving', 'theta_max', 'v_minus_c'): 0.5,
    ('horizon', 'temperature', 'omega'): 1.0,
    ('horizon', 'temperature', 'delta_n'): 1.0,
    ('horizon', 'hawking_rate', 'omega'): 1.0,
    ('horizon', 'hawking_rate', 'delta_n'): 3.0,
    ('accelerated', 'unruh_rate', 'acceleration'): 3.0,
    ('accelerated', 'unruh_rate', 'omega'): -2.0,
    ('accelerated', 'unruh_rate', 'delta_n'): 2.0,
}

TOLERANCES = {
    ('one_parameter', 'P', 'omega'): 0.05,
    ('one_parameter', 'E', 'omega'): 0.05,
    ('point_like', 'P', 'omega1'): 0.15,
    ('point_like', 'total_energy', 'omega1'): 0.15,
    ('needle', 'P', 'omega3'): 0.2,
    # the local light speed 1/(n0 + δn) bends the δn̄ law
    ('horizon', 'hawking_rate', 'delta_n'): 0.15,
}


def _sweep_pool_init():
    """
    Process pool initializer
    """
    for sig in (signal.SIGABRT, signal.SIGTERM, signal.SIGINT):
        signal.signal(sig, signal.SIG_DFL)


class SweepPoint(NamedTuple):
    """
    One row of a sweep table
    """
    parameter: float
    value: float
    error: float
    integrator: dict


@dataclass(frozen=True)
class ScalingFit:
    """
    Least-squares line through (log parameter, log value).
    residuals holds (parameter, value, fitted value, log residual) rows.
    """
    exponent: float
    stderr: float
    r_squared: float
    intercept: float
    residuals: Tuple[Tuple[float, float, float, float], ...] = field(
        default_factory=tuple
    )

    @property
    def flatness(self):
        values = [row[1] for row in self.residuals]
        return max(values) / min(values)

    def to_dict(self):
        return {
            'exponent': self.exponent,
            'stderr': self.stderr,
            'r_squared': self.r_squared,
            'intercept': self.intercept,
            'residuals': [list(row) for row in self.residuals],
        }


def _observable_variant(observable):
    if observable in STATIC_OBSERVABLES:
        return STATIC
    if observable in MOVING_OBSERVABLES + HORIZON_OBSERVABLES:
        return MOVING
    return ACCELERATED


def default_regime(template, observable):
    """
    The regime a template sits in, as used by the exponent table
    """
    if observable in HORIZON_OBSERVABLES:
        return 'horizon'
    return asymptotic_regime(template)


def geometric_grid(start, stop, points):
    """
    points values from start to stop in a geometric progression
    """
    if not (start > 0 and stop > start and points >= 2):
        raise SweepError(
            'A geometric grid needs 0 < start < stop and at least 2 points',
            context_dict={'start': start, 'stop': stop, 'points': points},
        )
    return tuple(float(v) for v in np.geomspace(start, stop, int(points)))


def apply_parameter(template, parameter, value, regime=None):
    """
    The template with the swept parameter set to value. Tied scales move
    together: omega2 also sets omega3 in the point_like and cosmological
    regimes, and omega sets all three scales of a static profile.

    :type template: PulseProfile
    :type parameter: str
    :type value: float
    :type regime: Union[str, None]
    :rtype: PulseProfile
    :raises: SweepError
    """
    variant = template.variant
    if parameter == 'delta_n':
        return template.replace(delta_n=value)
    if parameter == 'omega':
        if variant == STATIC:
            return template.replace(omega1=value, omega2=value, omega3=value)
        return template.replace(omega=value)
    if parameter in ('omega1', 'omega2', 'omega3') and variant == STATIC:
        if parameter == 'omega2' and regime in ('point_like', 'cosmological'):
            return template.replace(omega2=value, omega3=value)
        return template.replace(**{parameter: value})
    if parameter == 'v_minus_c' and variant == MOVING:
        velocity = np.asarray(template.velocity, dtype=float)
        speed = np.linalg.norm(velocity)
        direction = velocity / speed if speed > 0 else np.array([1.0, 0.0, 0.0])
        velocity = direction * (template.c + value)
        return template.replace(velocity=tuple(float(v) for v in velocity))
    if parameter == 'acceleration' and variant == ACCELERATED:
        traj = template.trajectory
        a0 = np.asarray(traj.a0, dtype=float)
        norm = np.linalg.norm(a0)
        direction = a0 / norm if norm > 0 else np.array([1.0, 0.0, 0.0])
        trajectory = Trajectory.uniform_acceleration(
            tuple(float(v) for v in direction * value), v0=traj.v0, r0=traj.r0,
        )
        return template.replace(trajectory=trajectory)
    raise SweepError(
        'Parameter {p!r} cannot be swept on a {v} profile'.format(
            p=parameter, v=variant
        ),
        context_dict={'parameter': parameter, 'variant': variant},
    )


@dataclass(frozen=True)
class SweepSpec:
    """
    A profile template, the parameter to sweep and its grid.

    values must be positive, increasing and geometric with at least
    MIN_POINTS entries; every point must stay in regime.
    grid is the lattice for envelopes without a closed form.
    """
    template: PulseProfile
    parameter: str
    values: Tuple[float, ...]
    observable: str = 'P'
    regime: Optional[str] = None
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)
    crossing: float = 0.5
    workers: int = 1
    grid: Optional[GridSpec] = None

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        if self.parameter not in PARAMETERS:
            raise SweepError(
                'Unknown sweep parameter {p!r}. Expected one of {c}'.format(
                    p=self.parameter, c=', '.join(PARAMETERS)
                ),
                context_dict={'parameter': self.parameter},
            )
        if self.observable not in OBSERVABLES:
            raise SweepError(
                'Unknown sweep observable {o!r}. Expected one of {c}'.format(
                    o=self.observable, c=', '.join(OBSERVABLES)
                ),
                context_dict={'observable': self.observable},
            )
        if self.template.variant != _observable_variant(self.observable):
            raise SweepError(
                '{o} is not computable for a {v} profile'.format(
                    o=self.observable, v=self.template.variant
                ),
                context_dict={
                    'observable': self.observable, 'variant': self.template.variant,
                },
            )
        if self.workers < 1:
            raise SweepError('workers must be positive', context_dict={'workers': self.workers})
        self._check_grid()
        if self.regime is None:
            object.__setattr__(
                self, 'regime', default_regime(self.template, self.observable)
            )
        if self.template.variant == STATIC and self.regime not in STATIC_REGIMES:
            raise SweepError(
                'A static sweep needs one of the regimes {c}, got {r}'.format(
                    c=', '.join(STATIC_REGIMES), r=self.regime
                ),
                context_dict={'regime': self.regime},
            )
        for value in self.values:
            self._check_regime(value)

    def _check_grid(self):
        values = np.asarray(self.values)
        context = {'parameter': self.parameter, 'values': list(self.values)}
        if values.size < MIN_POINTS:
            raise SweepError(
                'A sweep needs at least {n} values, got {m}'.format(
                    n=MIN_POINTS, m=values.size
                ),
                context_dict=context,
            )
        if not (np.all(np.isfinite(values)) and np.all(values > 0)):
            raise SweepError('Sweep values must be positive', context_dict=context)
        ratios = values[1:] / values[:-1]
        if np.any(ratios <= 1):
            raise SweepError('Sweep values must increase', context_dict=context)
        if not np.allclose(ratios, ratios[0], rtol=GRID_RTOL, atol=0):
            raise SweepError(
                'Sweep values must form a geometric progression',
                context_dict=context,
            )
        if self.parameter != 'v_minus_c' and values[-1] / values[0] < 10:
            LOGGER.warning(
                'Sweep of {p} spans less than a decade ({a:g} to {b:g})'.format(
                    p=self.parameter, a=values[0], b=values[-1]
                )
            )

    def _check_regime(self, value):
        try:
            p = self.profile_at(value)
        except KerrvacError as excp:
            raise SweepError(
                'Sweep point {p}={v:g} is not a valid profile: {e}'.format(
                    p=self.parameter, v=value, e=excp
                ),
                context_dict={'parameter': self.parameter, 'value': value},
            ) from excp
        if self.regime in STATIC_REGIMES:
            found = asymptotic_regime(p)
            if found != self.regime:
                raise SweepError(
                    'Sweep point {p}={v:g} leaves the {r} regime ({f})'.format(
                        p=self.parameter, v=value, r=self.regime, f=found
                    ),
                    context_dict={
                        'parameter': self.parameter, 'value': value,
                        'regime': self.regime, 'found': found,
                    },
                )

    def profile_at(self, value):
        return apply_parameter(self.template, self.parameter, value, self.regime)

    @property
    def deterministic(self):
        """
        Whether the sweep values carry no sampling noise
        """
        if self.observable in HORIZON_OBSERVABLES + UNRUH_OBSERVABLES:
            return True
        return self.integrator.method != MONTECARLO


def _static_point(p, observable, integrator, grid=None):
    s = spectrum_of(p, grid)
    if observable == 'P':
        est = total_probability(s, spec=integrator)
    elif observable == 'E':
        est = mean_photon_energy(s, spec=integrator)
    else:
        est = total_energy(s, spec=integrator)
    return est.value, est.error


def evaluate_point(p, observable, integrator=None, crossing=0.5, grid=None):
    """
    The observable of one sweep profile, with its error and the integrator
    settings it came from. grid samples envelopes without a closed form.
    """
    integrator = integrator or IntegratorSpec()
    meta = {}
    if observable in STATIC_OBSERVABLES:
        value, error = _static_point(p, observable, integrator, grid)
        meta = integrator.metadata()
    elif observable in MOVING_OBSERVABLES:
        report = emission_rate(moving_spectrum(p, grid), spec=integrator)
        meta = dict(report.integrator)
        if observable == 'rate':
            value, error = report.rate, report.rate_error
        elif observable == 'rate_energy':
            value, error = report.mean_photon_energy, 0.0
        else:
            value, error = report.theta_max, 0.0
    elif observable in HORIZON_OBSERVABLES:
        report = horizon_report(p, v=crossing_speed(p, crossing))
        value = report.temperature if observable == 'temperature' else report.rate_estimate
        error = 0.0
        meta = {'crossing': crossing, 'rate_tag': report.rate_tag}
    else:
        report = unruh_rate_estimate(p)
        value, error = report.rate_estimate, 0.0
        meta = {'rate_tag': report.rate_tag, 'valid': report.valid}
    return (
        float('nan') if value is None else float(value), float(error), meta
    )


def _sweep_point(spec, value):
    return evaluate_point(
        spec.profile_at(value), spec.observable, spec.integrator, spec.crossing,
        spec.grid,
    )


def _identify(excp, spec, value):
    context = dict(getattr(excp, 'context_dict', None) or {})
    context.update({'parameter': spec.parameter, 'value': value})
    excp.context_dict = context
    return excp


def run_sweep(spec, logger=None):
    """
    Evaluate the observable at every grid point

    :type spec: SweepSpec
    :param spec: What to sweep
    :type logger: Union[logging.Logger, None]
    :param logger: Where progress goes
    :rtype: Tuple[SweepPoint, ...]
    :returns: Rows ordered by parameter value
    :raises: SweepError, and integrator errors carrying the failing point
        in their context_dict
    """
    logger = logger or LOGGER
    if spec.workers <= 1:
        rows = []
        for value in spec.values:
            logger.info('Sweep point {p}={v:g}'.format(p=spec.parameter, v=value))
            try:
                rows.append(SweepPoint(value, *_sweep_point(spec, value)))
            except KerrvacError as excp:
                raise _identify(excp, spec, value)
        return tuple(rows)
    # Pool workers cannot start pools of their own
    inner = replace(spec, integrator=replace(spec.integrator, workers=1), workers=1)
    results = dict()
    rows = []
    with ProcessPool(min(spec.workers, len(spec.values)), initializer=_sweep_pool_init) as pool:
        for value in spec.values:
            results[value] = pool.apply_async(_sweep_point, args=(inner, value))
        for value in spec.values:
            try:
                rows.append(SweepPoint(value, *results[value].get()))
                logger.info('Sweep point {p}={v:g} done'.format(p=spec.parameter, v=value))
            except KeyboardInterrupt:
                logger.error('Sweep interrupted by user.')
                raise EarlyExitError()
            except KerrvacError as excp:
                raise _identify(excp, spec, value)
            except Exception:
                _, excp, tb = sys.exc_info()
                traces = ['{e}'.format(e=excp)]
                traces += map(str.strip, traceback.format_tb(tb))
                raise SweepError(
                    'Sweep point {p}={v:g} failed: {t}'.format(
                        p=spec.parameter, v=value, t='\n'.join(traces)
                    ),
                    context_dict={'parameter': spec.parameter, 'value': value},
                ) from None
    return tuple(rows)


def fit_exponent(table):
    """
    Ordinary least squares of log(value) on log(parameter)

    :type table: Iterable[Sequence[float]]
    :param table: Rows whose first two entries are parameter and value
    :rtype: ScalingFit
    :raises: FitError
    """
    rows = [(float(row[0]), float(row[1])) for row in table]
    if len(rows) < MIN_POINTS:
        raise FitError(
            'A fit needs at least {n} points, got {m}'.format(n=MIN_POINTS, m=len(rows)),
            context_dict={'points': len(rows)},
        )
    x, y = np.array(rows).T
    bad = ~(np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0))
    if np.any(bad):
        raise FitError(
            'Power-law fits need positive values',
            context_dict={'rows': [list(r) for r, b in zip(rows, bad) if b]},
        )
    lx, ly = np.log(x), np.log(y)
    fit = linregress(lx, ly)
    predicted = fit.intercept + fit.slope * lx
    residual = ly - predicted
    ss_res = float(np.sum(residual ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    # a constant is fitted exactly by a flat line
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    stderr = float(fit.stderr)
    if not math.isfinite(stderr):
        raise FitError('The fit has no finite standard error', context_dict={'rows': rows})
    return ScalingFit(
        exponent=float(fit.slope),
        stderr=stderr,
        r_squared=float(r_squared),
        intercept=float(fit.intercept),
        residuals=tuple(
            (float(a), float(b), float(math.exp(c)), float(d))
            for a, b, c, d in zip(x, y, predicted, residual)
        ),
    )


def expected_exponent(regime, observable, parameter):
    """
    The predicted exponent of observable in parameter within regime

    :raises: ExponentLookupError for an unknown triple
    """
    try:
        return EXPECTED[(regime, observable, parameter)]
    except KeyError:
        raise ExponentLookupError(
            'No predicted exponent for {o} in {p} in the {r} regime'.format(
                o=observable, p=parameter, r=regime
            ),
            context_dict={
                'regime': regime, 'observable': observable, 'parameter': parameter,
            },
        ) from None


def exponent_tolerance(regime, observable, parameter):
    return TOLERANCES.get((regime, observable, parameter), DEFAULT_TOLERANCE)


def make_verdict(regime, observable, parameter, fit, deterministic=True):
    """
    Compare a fit against the predicted exponent. A sweep whose
    exponent is predicted to vanish must also stay flat within FLATNESS;
    any other deterministic sweep must also be a clean power law, with
    R² of at least MIN_R_SQUARED.

    :type fit: ScalingFit
    :type deterministic: bool
    :param deterministic: False for Monte-Carlo sweeps, whose noise
        lowers R² on its own
    :rtype: dict
    """
    expected = expected_exponent(regime, observable, parameter)
    tolerance = exponent_tolerance(regime, observable, parameter)
    passed = abs(fit.exponent - expected) <= tolerance
    out = {
        'regime': regime,
        'observable': observable,
        'parameter': parameter,
        'expected': expected,
        'fitted': fit.exponent,
        'stderr': fit.stderr,
        'r_squared': fit.r_squared,
        'min_r_squared': None,
        'tolerance': tolerance,
    }
    if expected == 0:
        out['flatness'] = fit.flatness
        passed = passed and fit.flatness <= FLATNESS
    elif deterministic:
        out['min_r_squared'] = MIN_R_SQUARED
        passed = passed and fit.r_squared >= MIN_R_SQUARED
    out['pass'] = bool(passed)
    return out


SWEEP_HEADER = ('parameter', 'value', 'error', 'fitted', 'log_residual')


def write_sweep_csv(fname, table, fit=None, config_hash=None):
    """
    Write a sweep table, with the fitted values when a fit is given
    """
    rows = []
    for index, row in enumerate(table):
        fitted = residual = ''
        if fit is not None:
            fitted, residual = fit.residuals[index][2:]
        rows.append((row[0], row[1], row[2], fitted, residual))
    return write_commented_csv(fname, SWEEP_HEADER, rows, config_hash)


__all__ = [
    'DEFAULT_TOLERANCE', 'EXPECTED', 'FLATNESS', 'MIN_R_SQUARED', 'OBSERVABLES',
    'PARAMETERS', 'SWEEP_HEADER', 'ScalingFit', 'SweepPoint', 'SweepSpec',
    'TOLERANCES', 'apply_parameter', 'default_regime', 'evaluate_point',
    'expected_exponent', 'exponent_tolerance', 'fit_exponent', 'geometric_grid',
    'make_verdict', 'run_sweep', 'write_sweep_csv',
]
