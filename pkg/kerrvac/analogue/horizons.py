"""
Analogue horizons of a pulse moving between the light speeds inside and
outside it.

In the comoving frame light moves at c(x) = 1/(n0 + δn(x)). A pulse of
speed v with c_inside < v < c_outside has points where v = c(x): the
front one acts as a black hole horizon, the back one as a white hole
horizon. Temperatures follow T = κ / 2π from the surface gravity
κ = |d(v - c)/dx| at the horizon. The radiated power of such horizons is
beyond lowest order perturbation theory, so the rates here are order of
magnitude estimates with prefactor 1.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from kerrvac.exceptions import (
    DegenerateHorizonError, DomainError, KerrvacError, MissingAreaError,
    NoHorizonError, WrongVariantError
)
from kerrvac.profiles import MOVING, comoving_gradient, comoving_section


LOGGER = logging.getLogger('KERRVAC')

SUBLUMINAL = 'SubLuminal'
TRANSLUMINAL = 'TransLuminal'
SUPERLUMINAL = 'SuperLuminal'
BLACK_HOLE = 'BlackHole'
WHITE_HOLE = 'WhiteHole'
DEGENERATE = 'Degenerate'

# Speeds this close (relative) to c_inside or c_outside count as equal
BOUNDARY_TOLERANCE = 1e-12
SEARCH_POINTS = 4096
# Half-width of the search in units of c / Ω
SEARCH_SPAN = 6.0
ROOT_TOLERANCE = 1e-12
DEGENERATE_GRADIENT = 1e-14
# Step of the difference quotient in units of c / Ω
GRADIENT_STEP = 1e-4
ESTIMATE_TAG = 'order-of-magnitude'
ONE_D_TAG = 'non-perturbative estimate'


@dataclass(frozen=True)
class RegimeClassification:
    regime: str
    c_outside: float
    c_inside: float
    v: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Horizon:
    """
    A point of the comoving section where the pulse speed matches the
    local light speed
    """
    position: float
    kind: str
    kappa: float = 0.0
    temperature: float = 0.0


@dataclass(frozen=True)
class HorizonReport:
    regime: RegimeClassification
    horizons: Tuple[Horizon, ...]
    omega: float
    delta_n: float
    area: Optional[float] = None
    dimension: int = 3
    area_convention: str = ''
    frame: str = 'comoving'
    rate_estimate: Optional[float] = None
    rate_tag: str = ESTIMATE_TAG
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def temperature(self):
        """
        Largest horizon temperature, 0 without horizons
        """
        return max((h.temperature for h in self.horizons), default=0.0)

    def to_dict(self):
        return {
            'regime': self.regime.to_dict(),
            'horizons': [asdict(h) for h in self.horizons],
            'temperature': self.temperature,
            'omega': self.omega,
            'delta_n': self.delta_n,
            'area': self.area,
            'area_convention': self.area_convention,
            'dimension': self.dimension,
            'frame': self.frame,
            'rate_estimate': self.rate_estimate,
            'rate_tag': self.rate_tag,
            'warnings': list(self.warnings),
        }


def classify_regime(n0, delta_n, v):
    """
    Compare a pulse speed with the light speeds outside (1/n0) and at the
    centre (1/(n0 + δn̄)) of the pulse. A speed equal to either of them,
    within BOUNDARY_TOLERANCE, has no simple horizon and is classified
    sub-luminal at c_inside and super-luminal at c_outside.

    :type n0: float
    :param n0: Background index
    :type delta_n: float
    :param delta_n: Peak index change
    :type v: float
    :param v: Pulse speed
    :rtype: RegimeClassification
    :raises: DomainError
    """
    for name, value in (('n0', n0), ('delta_n', delta_n), ('v', v)):
        if not (math.isfinite(value) and value >= 0):
            raise DomainError(
                '{n} must be a finite number >= 0, got {v}'.format(n=name, v=value),
                context_dict={name: value},
            )
    if not (n0 > 0 and delta_n < 1):
        raise DomainError(
            'Need n0 > 0 and delta_n < 1',
            context_dict={'n0': n0, 'delta_n': delta_n},
        )
    c_out = 1.0 / n0
    c_in = 1.0 / (n0 + delta_n)
    if v <= c_in * (1.0 + BOUNDARY_TOLERANCE):
        regime = SUBLUMINAL
    elif v >= c_out * (1.0 - BOUNDARY_TOLERANCE):
        regime = SUPERLUMINAL
    else:
        regime = TRANSLUMINAL
    return RegimeClassification(regime, c_out, c_in, float(v))


def _check_moving(p):
    if getattr(p, 'variant', None) != MOVING:
        raise WrongVariantError(
            'Horizons are defined for uniformly moving pulses',
            context_dict={'variant': getattr(p, 'variant', None)},
        )


def local_light_speed(p, x):
    """
    c(x) = 1 / (n0 + δn(x)) along the comoving section
    """
    return 1.0 / (p.n0 + comoving_section(p, x))


def crossing_speed(p, depth):
    """
    The speed that crosses the pulse where δn = depth · δn̄. Horizons of
    this speed sit at the same scaled positions for every Ω and δn̄.
    """
    if not 0 < depth < 1:
        raise DomainError(
            'The crossing depth must lie in (0, 1), got {d}'.format(d=depth),
            context_dict={'depth': depth},
        )
    return 1.0 / (p.n0 + depth * p.delta_n)


def find_horizons(p, v=None, points=SEARCH_POINTS, span=SEARCH_SPAN):
    """
    Every point of the comoving section where v = c(x), bracketed on a
    dense grid and refined with Brent's method. Roots where v - c grows
    towards the front of the pulse are black hole horizons, the others
    white hole horizons; tangential roots are typed Degenerate.

    :type p: PulseProfile
    :param p: A uniformly moving pulse
    :type v: Union[float, None]
    :param v: Pulse speed; the profile's if None
    :type points: int
    :param points: Points of the bracketing grid
    :type span: float
    :param span: Half-width of the grid in units of c / Ω
    :rtype: List[Horizon]
    :raises: NoHorizonError, WrongVariantError
    """
    _check_moving(p)
    v = float(p.speed if v is None else v)
    regime = classify_regime(p.n0, p.delta_n, v)
    if regime.regime != TRANSLUMINAL:
        raise NoHorizonError(
            'A {r} pulse has no horizon: v={v:.6g}, c_inside={i:.6g}, '
            'c_outside={o:.6g}'.format(
                r=regime.regime, v=v, i=regime.c_inside, o=regime.c_outside
            ),
            context_dict=regime.to_dict(),
        )
    width = p.c / p.omega
    x = np.linspace(-span * width, span * width, int(points))

    def mismatch(at):
        return float(local_light_speed(p, at)) - v

    values = local_light_speed(p, x) - v
    signs = np.sign(values)
    out = []
    for i in range(len(x) - 1):
        if signs[i] == 0:
            left = signs[i - 1] if i > 0 else 0
            right = signs[i + 1]
            if left == right and left != 0:
                out.append(Horizon(float(x[i]), DEGENERATE))
            else:
                kind = BLACK_HOLE if right > 0 else WHITE_HOLE
                out.append(Horizon(float(x[i]), kind))
            continue
        if signs[i] * signs[i + 1] < 0:
            root = brentq(
                mismatch, x[i], x[i + 1], xtol=1e-15 * width,
                rtol=4 * np.finfo(float).eps, maxiter=200,
            )
            if abs(mismatch(root)) > ROOT_TOLERANCE * v:
                raise KerrvacError(
                    'Horizon refinement stalled near x={x:.6g}'.format(x=root),
                    context_dict={'position': root, 'mismatch': mismatch(root)},
                )
            kind = BLACK_HOLE if signs[i + 1] > 0 else WHITE_HOLE
            out.append(Horizon(float(root), kind))
    if not out:
        raise NoHorizonError(
            'No crossing of v={v:.6g} within {s} widths of the pulse'.format(
                v=v, s=span
            ),
            context_dict=regime.to_dict(),
        )
    return out


def horizon_gradient(speed, x, step):
    """
    |dc/dx| at x by central differences, for any light speed profile c(x)
    """
    return abs(speed(x + step) - speed(x - step)) / (2.0 * step)


def surface_gravity(p, x, method='analytic'):
    """
    Surface gravity κ = |c(x)² dδn/dx| of a horizon at x and its
    temperature κ / 2π

    :type p: PulseProfile
    :param p: A uniformly moving pulse
    :type x: float
    :param x: Horizon position on the comoving section
    :type method: str
    :param method: 'analytic' uses the envelope slope, 'finite_difference'
        a central difference of c(x) with step GRADIENT_STEP c / Ω
    :rtype: Tuple[float, float]
    :returns: (κ, T)
    :raises: DegenerateHorizonError
    """
    _check_moving(p)
    if method == 'analytic':
        c = float(local_light_speed(p, x))
        kappa = abs(c * c * float(comoving_gradient(p, x)))
    elif method == 'finite_difference':
        kappa = horizon_gradient(
            lambda at: float(local_light_speed(p, at)), float(x),
            GRADIENT_STEP * p.c / p.omega,
        )
    else:
        raise KerrvacError('Unknown surface gravity method {m!r}'.format(m=method))
    if kappa < DEGENERATE_GRADIENT:
        raise DegenerateHorizonError(
            'The speed mismatch is flat at x={x:.6g}'.format(x=x),
            context_dict={'position': float(x), 'kappa': kappa},
        )
    return kappa, kappa / (2.0 * math.pi)


def default_area(p):
    """
    (c/Ω)², the cross-section of an isotropic pulse
    """
    return (p.c / p.omega) ** 2


def hawking_rate_estimate(report):
    """
    Order of magnitude of the pairs emitted per unit time by the horizons
    of a report: A T³ in three dimensions, Ω δn̄ in one

    :type report: HorizonReport
    :rtype: float
    :raises: MissingAreaError
    """
    if report.dimension == 1:
        return report.omega * report.delta_n
    if report.area is None:
        raise MissingAreaError(
            'A three dimensional Hawking estimate needs the horizon area'
        )
    return report.area * report.temperature ** 3


def horizon_report(p, v=None, area=None, dimension=3, method='analytic', logger=None):
    """
    Regime, horizons, surface gravities, temperatures and rate estimate of
    a moving pulse

    :type p: PulseProfile
    :param p: A uniformly moving pulse
    :type v: Union[float, None]
    :param v: Pulse speed; the profile's if None
    :type area: Union[float, None]
    :param area: Horizon area; (c/Ω)² if None
    :type dimension: int
    :param dimension: 3, or 1 for the one dimensional estimate
    :type method: str
    :param method: How surface gravities are taken, see surface_gravity
    :type logger: Union[logging.Logger, None]
    :param logger: Where the estimate tags are noted
    :rtype: HorizonReport
    :raises: NoHorizonError, DegenerateHorizonError
    """
    logger = logger or LOGGER
    if dimension not in (1, 3):
        raise KerrvacError('dimension must be 1 or 3, got {d}'.format(d=dimension))
    v = float(p.speed if v is None else v)
    regime = classify_regime(p.n0, p.delta_n, v)
    horizons = []
    for h in find_horizons(p, v):
        if h.kind == DEGENERATE:
            horizons.append(h)
            continue
        kappa, temperature = surface_gravity(p, h.position, method)
        horizons.append(Horizon(h.position, h.kind, kappa, temperature))
    warnings = []
    convention = ''
    if dimension == 3 and area is None:
        area = default_area(p)
        convention = '(c/omega)^2'
        warnings.append(
            'area: horizon area taken as (c/omega)^2 for a pulse without '
            'transverse scales'
        )
    report = HorizonReport(
        regime=regime, horizons=tuple(horizons), omega=p.omega,
        delta_n=p.delta_n, area=area if dimension == 3 else None,
        dimension=dimension, area_convention=convention,
        rate_tag=ESTIMATE_TAG if dimension == 3 else ONE_D_TAG,
        warnings=tuple(warnings),
    )
    for warning in warnings:
        logger.info(warning)
    return replace(report, rate_estimate=hawking_rate_estimate(report))


__all__ = [
    'BLACK_HOLE', 'DEGENERATE', 'Horizon', 'HorizonReport',
    'RegimeClassification', 'SUBLUMINAL', 'SUPERLUMINAL', 'TRANSLUMINAL',
    'WHITE_HOLE', 'classify_regime', 'crossing_speed', 'default_area',
    'find_horizons', 'horizon_gradient', 'horizon_report',
    'hawking_rate_estimate', 'local_light_speed', 'surface_gravity',
]
