"""
Unruh temperatures and rate estimates for accelerated pulses.

A pulse whose frequency scale Ω is well above its acceleration a smears
out its trajectory and scatters the thermal bath T = a / 2π it sees in
its own frame. The rate σ T³ with σ = δn̄² (c/Ω)² is an order of
magnitude estimate with prefactor 1.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

import numpy as np

from kerrvac.analogue.constants import C0, CONSTANTS, HBAR, K_B
from kerrvac.exceptions import (
    DomainError, UnsupportedTrajectoryError, WrongVariantError
)
from kerrvac.profiles import ACCELERATED, SMEARING_RATIO, TABULATED


LOGGER = logging.getLogger('KERRVAC')

ESTIMATE_TAG = 'order-of-magnitude'


@dataclass(frozen=True)
class UnruhTemperature:
    """
    T = a / 2π in the units of a, and in Kelvin when a scale is known
    """
    natural: float
    kelvin: Optional[float] = None


@dataclass(frozen=True)
class UnruhReport:
    acceleration: float
    temperature: float
    temperature_kelvin: Optional[float]
    cross_section: float
    rate_estimate: float
    valid: bool
    approximate: bool = False
    medium_frame: bool = False
    rate_tag: str = ESTIMATE_TAG
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self):
        out = asdict(self)
        out['warnings'] = list(self.warnings)
        if self.temperature_kelvin is not None:
            out['constants'] = dict(CONSTANTS)
        return out


def unruh_temperature(a, si=False, reference_frequency=None, n0=None):
    """
    Unruh temperature of a detector with proper acceleration a

    :type a: float
    :param a: Acceleration, in natural units of the reference frequency
        or in m s^-2 when si is True
    :type si: bool
    :param si: Whether a is given in m s^-2
    :type reference_frequency: Union[float, None]
    :param reference_frequency: ω_ref in rad s^-1, the unit of natural
        quantities; Kelvin values need it unless si is True
    :type n0: Union[float, None]
    :param n0: Medium index; when given, the medium light speed c0 / n0
        replaces c0
    :rtype: UnruhTemperature
    :raises: DomainError
    """
    if not (math.isfinite(a) and a >= 0):
        raise DomainError(
            'The acceleration must be a finite number >= 0, got {a}'.format(a=a),
            context_dict={'acceleration': a},
        )
    index = 1.0 if n0 is None else float(n0)
    if si:
        natural = a / (2.0 * math.pi)
        kelvin = HBAR * a * index / (2.0 * math.pi * K_B * C0)
        return UnruhTemperature(natural, kelvin)
    natural = a * index / (2.0 * math.pi)
    kelvin = None
    if reference_frequency is not None:
        kelvin = HBAR * reference_frequency * natural / K_B
    return UnruhTemperature(natural, kelvin)


def _acceleration(p, time):
    traj = p.trajectory
    if traj.kind != TABULATED:
        return traj.peak_acceleration, False
    if time is None:
        raise UnsupportedTrajectoryError(
            'A tabulated trajectory is not uniformly accelerated; give the '
            'time of an instantaneous estimate',
            context_dict={'trajectory': traj.kind},
        )
    acc = np.asarray(traj.acceleration(time), dtype=float)
    return float(np.linalg.norm(acc)), True


def unruh_rate_estimate(
    p, time=None, reference_frequency=None, medium_frame=False, logger=None
):
    """
    Order of magnitude of the photons scattered per unit time by an
    accelerated pulse

    :type p: PulseProfile
    :param p: An accelerated profile
    :type time: Union[float, None]
    :param time: Instant of the estimate, needed for tabulated trajectories
    :type reference_frequency: Union[float, None]
    :param reference_frequency: ω_ref in rad s^-1 for the Kelvin value
    :type medium_frame: bool
    :param medium_frame: Use the medium light speed in the temperature
    :type logger: Union[logging.Logger, None]
    :param logger: Where the validity warning goes
    :rtype: UnruhReport
    :raises: WrongVariantError, UnsupportedTrajectoryError
    """
    logger = logger or LOGGER
    if getattr(p, 'variant', None) != ACCELERATED:
        raise WrongVariantError(
            'Unruh estimates need an accelerated profile',
            context_dict={'variant': getattr(p, 'variant', None)},
        )
    a, approximate = _acceleration(p, time)
    temperature = unruh_temperature(
        a, reference_frequency=reference_frequency,
        n0=p.n0 if medium_frame else None,
    )
    sigma = p.delta_n ** 2 * (p.c / p.omega) ** 2
    warnings = []
    valid = p.omega >= SMEARING_RATIO * a
    if not valid:
        warnings.append(
            'unruh-validity: omega={o} < {k} |a| = {b}; the estimate needs a '
            'pulse that smears out its trajectory, omega >> |a|'.format(
                o=p.omega, k=SMEARING_RATIO, b=SMEARING_RATIO * a
            )
        )
    if approximate:
        warnings.append(
            'approximate: instantaneous estimate at t={t} on a tabulated '
            'trajectory'.format(t=time)
        )
    for warning in warnings:
        logger.warning(warning)
    return UnruhReport(
        acceleration=a,
        temperature=temperature.natural,
        temperature_kelvin=temperature.kelvin,
        cross_section=sigma,
        rate_estimate=sigma * temperature.natural ** 3,
        valid=valid,
        approximate=approximate,
        medium_frame=bool(medium_frame),
        warnings=tuple(warnings),
    )


__all__ = [
    'UnruhReport', 'UnruhTemperature', 'unruh_rate_estimate',
    'unruh_temperature',
]
