"""
Space-time refractive index perturbations δn(t, r), the Kerr conversion
from intensity to δn, and profile validation.

Natural units are used throughout (hbar = c0 = 1). A single reference
frequency sets the scale and every rate is a dimensionless multiple of it.
The light speed inside the medium is c = 1/n0.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from kerrvac.exceptions import (
    DomainError, ProfileError, WrongVariantError
)


LOGGER = logging.getLogger('KERRVAC')

STATIC = 'static_anisotropic'
MOVING = 'uniformly_moving'
ACCELERATED = 'accelerated'
VARIANTS = (STATIC, MOVING, ACCELERATED)

UNIFORM_VELOCITY = 'uniform_velocity'
UNIFORM_ACCELERATION = 'uniform_acceleration'
TABULATED = 'tabulated'
TRAJECTORY_KINDS = (UNIFORM_VELOCITY, UNIFORM_ACCELERATION, TABULATED)

# Fused silica, W^-1 cm^2
FUSED_SILICA_N2 = 3e-16
PERTURBATIVE_WARNING = 0.1
PERTURBATIVE_LIMIT = 0.5
# Ratio between two scales for them to count as well separated
REGIME_RATIO = 30.0
# Omega must exceed the acceleration by this factor for the Unruh picture
SMEARING_RATIO = 10.0
_RATIO_SLACK = 1.0 - 1e-9


def _gaussian(u2):
    return np.exp(-u2)


def _sech(u2):
    # sech(x) = 2 e^-x / (1 + e^-2x), stable for x >= 0
    e = np.exp(-u2)
    return 2.0 * e / (1.0 + e * e)


def _gaussian_slope(u):
    return -2.0 * u * np.exp(-u * u)


def _sech_slope(u):
    u2 = u * u
    return -2.0 * u * _sech(u2) * np.tanh(u2)


# Envelopes are functions of the squared scaled argument |u|^2
ENVELOPES = {
    'gaussian': _gaussian,
    'sech': _sech,
}
# df/du along a single axis
ENVELOPE_SLOPES = {
    'gaussian': _gaussian_slope,
    'sech': _sech_slope,
}
# Integral of f^2 over the four scaled coordinates
ENVELOPE_NORMS = {
    'gaussian': (math.pi / 2.0) ** 2,
    'sech': math.pi ** 2 * math.log(2.0),
}


def _vector(value, name):
    try:
        out = tuple(float(v) for v in value)
    except TypeError:
        raise ProfileError(
            '{n} must be a 3-vector, got {v!r}'.format(n=name, v=value)
        ) from None
    if len(out) != 3 or not all(math.isfinite(v) for v in out):
        raise ProfileError(
            '{n} must be a finite 3-vector, got {v!r}'.format(n=name, v=value)
        )
    return out


@dataclass(frozen=True)
class MaterialParams:
    """
    Background dielectric: refractive index n0 and the optional
    Kerr coefficient n2 in W^-1 cm^2
    """
    n0: float = 1.0
    kerr_n2: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.n0) and self.n0 >= 1.0):
            raise ProfileError(
                'n0 must be a finite number >= 1, got {n}'.format(n=self.n0),
                context_dict={'n0': self.n0},
            )
        if self.kerr_n2 is not None and not self.kerr_n2 >= 0:
            raise ProfileError(
                'kerr_n2 must be >= 0, got {k}'.format(k=self.kerr_n2),
                context_dict={'kerr_n2': self.kerr_n2},
            )

    @property
    def c(self):
        """
        Light speed in the medium, in units of the vacuum light speed
        """
        return 1.0 / self.n0


@dataclass(frozen=True)
class Trajectory:
    """
    Trajectory r_P(t) of the centre of an accelerated pulse.

    uniform_velocity: r0 + v0 t
    uniform_acceleration: r0 + v0 t + a0 t^2 / 2
    tabulated: cubic spline through (times, positions)
    """
    kind: str
    r0: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    v0: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    a0: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    times: Tuple[float, ...] = ()
    positions: Tuple[Tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ProfileError(
                'Unknown trajectory kind {k!r}. Expected one of {c}'.format(
                    k=self.kind, c=', '.join(TRAJECTORY_KINDS)
                )
            )
        for name in ('r0', 'v0', 'a0'):
            object.__setattr__(self, name, _vector(getattr(self, name), name))
        if self.kind != TABULATED:
            return
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if times.ndim != 1 or times.size < 4:
            raise ProfileError('A tabulated trajectory needs at least 4 samples')
        if positions.shape != (times.size, 3):
            raise ProfileError(
                'Tabulated positions must have shape ({n}, 3)'.format(n=times.size)
            )
        if not np.all(np.diff(times) > 0):
            raise ProfileError('Tabulated sample times must be strictly increasing')
        speeds = np.diff(positions, axis=0) / np.diff(times)[:, None]
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(speeds))):
            raise ProfileError('Tabulated trajectory has non-finite positions or speeds')
        object.__setattr__(self, 'times', tuple(times.tolist()))
        object.__setattr__(
            self, 'positions', tuple(tuple(row) for row in positions.tolist())
        )

    @classmethod
    def uniform_velocity(cls, velocity, r0=(0.0, 0.0, 0.0)):
        return cls(kind=UNIFORM_VELOCITY, r0=r0, v0=velocity)

    @classmethod
    def uniform_acceleration(cls, acceleration, v0=(0.0, 0.0, 0.0), r0=(0.0, 0.0, 0.0)):
        return cls(kind=UNIFORM_ACCELERATION, r0=r0, v0=v0, a0=acceleration)

    @classmethod
    def tabulated(cls, times, positions):
        return cls(kind=TABULATED, times=times, positions=positions)

    def _spline(self):
        return CubicSpline(
            np.asarray(self.times), np.asarray(self.positions), axis=0
        )

    def position(self, t):
        """
        Position of the pulse centre at time(s) t. The output has shape
        t.shape + (3,)
        """
        t = np.asarray(t, dtype=float)
        if self.kind == TABULATED:
            return self._spline()(t)
        tt = t[..., None]
        return (
            np.asarray(self.r0) + np.asarray(self.v0) * tt
            + 0.5 * np.asarray(self.a0) * tt * tt
        )

    def acceleration(self, t):
        """
        Acceleration of the pulse centre at time(s) t
        """
        t = np.asarray(t, dtype=float)
        if self.kind == TABULATED:
            return self._spline()(t, 2)
        return np.broadcast_to(np.asarray(self.a0), t.shape + (3,)).copy()

    @property
    def peak_acceleration(self):
        """
        Largest acceleration magnitude along the trajectory
        """
        if self.kind == TABULATED:
            acc = self.acceleration(np.asarray(self.times))
            return float(np.max(np.linalg.norm(acc, axis=-1)))
        return float(np.linalg.norm(self.a0))


@dataclass(frozen=True)
class PulseProfile:
    """
    A refractive index perturbation δn(t, r) = δn̄ f(scaled arguments).

    static_anisotropic:
        scaled argument (Ω1 t, Ω2 x / c, Ω3 y / c, Ω3 z / c).
        Ω1 = 0 is a stationary perturbation δn(r).
    uniformly_moving:
        scaled argument Ω (r - v t) / c
    accelerated:
        scaled argument Ω (r - r_P(t)) / c
    """
    variant: str
    delta_n: float
    material: MaterialParams = MaterialParams()
    envelope: str = 'gaussian'
    omega1: float = 0.0
    omega2: float = 0.0
    omega3: float = 0.0
    omega: float = 0.0
    velocity: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    trajectory: Optional[Trajectory] = None
    t0: float = 0.0
    r0: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise WrongVariantError(
                'Unknown profile variant {v!r}. Expected one of {c}'.format(
                    v=self.variant, c=', '.join(VARIANTS)
                )
            )
        if self.envelope not in ENVELOPES:
            raise ProfileError(
                'Unknown envelope {e!r}. Expected one of {c}'.format(
                    e=self.envelope, c=', '.join(sorted(ENVELOPES))
                )
            )
        dn = self.delta_n
        if not (math.isfinite(dn) and 0.0 <= dn < PERTURBATIVE_LIMIT):
            raise ProfileError(
                'delta_n must lie in [0, {l}), got {d}'.format(
                    l=PERTURBATIVE_LIMIT, d=dn
                ),
                context_dict={'delta_n': dn},
            )
        if dn > PERTURBATIVE_WARNING:
            LOGGER.warning(
                'delta_n={d} is above {w}; lowest order perturbation '
                'theory is unreliable'.format(d=dn, w=PERTURBATIVE_WARNING)
            )
        object.__setattr__(self, 'velocity', _vector(self.velocity, 'velocity'))
        object.__setattr__(self, 'r0', _vector(self.r0, 'r0'))
        if not math.isfinite(self.t0):
            raise ProfileError('t0 must be finite')
        if self.variant == STATIC:
            if not (self.omega1 >= 0 and self.omega2 > 0 and self.omega3 > 0):
                raise ProfileError(
                    'A static profile needs omega1 >= 0 and omega2, omega3 > 0',
                    context_dict={
                        'omega1': self.omega1, 'omega2': self.omega2,
                        'omega3': self.omega3,
                    },
                )
            if not all(map(math.isfinite, (self.omega1, self.omega2, self.omega3))):
                raise ProfileError('Profile rates must be finite')
        elif not (math.isfinite(self.omega) and self.omega > 0):
            raise ProfileError(
                'omega must be strictly positive, got {o}'.format(o=self.omega),
                context_dict={'omega': self.omega},
            )
        if self.variant == ACCELERATED and self.trajectory is None:
            raise ProfileError('An accelerated profile needs a trajectory')

    @classmethod
    def static(
        cls, omega1, omega2, omega3, delta_n, n0=1.0, envelope='gaussian',
        t0=0.0, r0=(0.0, 0.0, 0.0), kerr_n2=None,
    ):
        return cls(
            variant=STATIC, delta_n=delta_n,
            material=MaterialParams(n0=n0, kerr_n2=kerr_n2),
            envelope=envelope, omega1=omega1, omega2=omega2, omega3=omega3,
            t0=t0, r0=r0,
        )

    @classmethod
    def one_parameter(cls, omega, delta_n, n0=1.0, envelope='gaussian', **kwargs):
        """
        The pulse δn̄ f(Ω t, Ω r / c), one rate for time and space
        """
        return cls.static(omega, omega, omega, delta_n, n0=n0, envelope=envelope, **kwargs)

    @classmethod
    def moving(
        cls, omega, velocity, delta_n, n0=1.0, envelope='gaussian',
        r0=(0.0, 0.0, 0.0), kerr_n2=None,
    ):
        return cls(
            variant=MOVING, delta_n=delta_n,
            material=MaterialParams(n0=n0, kerr_n2=kerr_n2),
            envelope=envelope, omega=omega, velocity=velocity, r0=r0,
        )

    @classmethod
    def accelerated(
        cls, omega, trajectory, delta_n, n0=1.0, envelope='gaussian',
        kerr_n2=None,
    ):
        return cls(
            variant=ACCELERATED, delta_n=delta_n,
            material=MaterialParams(n0=n0, kerr_n2=kerr_n2),
            envelope=envelope, omega=omega, trajectory=trajectory,
        )

    def replace(self, **changes):
        """
        Copy of this profile with some fields changed
        """
        return dataclasses.replace(self, **changes)

    @property
    def n0(self):
        return self.material.n0

    @property
    def c(self):
        return self.material.c

    @property
    def speed(self):
        return float(np.linalg.norm(self.velocity))

    @property
    def fastest_rate(self):
        if self.variant == STATIC:
            return max(self.omega1, self.omega2, self.omega3)
        return self.omega


@dataclass(frozen=True)
class BoostedProfile:
    """
    A profile seen from a frame related to its own by medium Lorentz
    transformations. matrix maps the new (t, x, y, z) onto the
    coordinates of the base profile.
    """
    base: PulseProfile
    matrix: Tuple[Tuple[float, ...], ...]
    velocity: Tuple[float, float, float]
    frame: str = 'boosted'

    variant = 'boosted'

    @property
    def delta_n(self):
        return self.base.delta_n

    @property
    def material(self):
        return self.base.material

    @property
    def n0(self):
        return self.base.n0

    @property
    def c(self):
        return self.base.c

    @property
    def envelope(self):
        return self.base.envelope

    @property
    def omega(self):
        return self.base.omega

    def to_base_frame(self, t, r):
        """
        Map event coordinates of this frame onto the frame of the base profile
        """
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        t, r = np.broadcast_arrays(t[..., None], r)
        events = np.concatenate([t[..., :1], r], axis=-1)
        mapped = events @ np.asarray(self.matrix).T
        return mapped[..., 0], mapped[..., 1:]


def squared_argument(p, t, r):
    """
    The squared scaled argument |u|^2 of the envelope at (t, r)
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    c = p.c
    if p.variant == STATIC:
        d = r - np.asarray(p.r0)
        tau = t - p.t0
        return (
            (p.omega1 * tau) ** 2
            + (
                (p.omega2 * d[..., 0]) ** 2
                + p.omega3 ** 2 * (d[..., 1] ** 2 + d[..., 2] ** 2)
            ) / c ** 2
        )
    if p.variant == MOVING:
        d = r - np.asarray(p.r0) - np.asarray(p.velocity) * t[..., None]
    else:
        d = r - p.trajectory.position(t)
    return p.omega ** 2 * np.sum(d * d, axis=-1) / c ** 2


def evaluate_profile(p, t, r):
    """
    Evaluate δn(t, r) of a profile. t broadcasts against r[..., 0].

    :type p: Union[PulseProfile, BoostedProfile]
    :param p: The perturbation to evaluate
    :type t: Union[float, numpy.ndarray]
    :param t: Time(s) in natural units
    :type r: numpy.ndarray
    :param r: Position(s) with a trailing axis of length 3
    :rtype: Union[float, numpy.ndarray]
    :returns: δn at the given events, bounded by δn̄
    """
    if isinstance(p, BoostedProfile):
        t, r = p.to_base_frame(t, r)
        p = p.base
    out = p.delta_n * ENVELOPES[p.envelope](squared_argument(p, t, r))
    if np.ndim(out) == 0:
        return float(out)
    return out


def comoving_section(p, x):
    """
    δn along the direction of motion of a moving pulse, through its
    centre, as a function of the comoving coordinate x
    """
    if p.variant != MOVING:
        raise WrongVariantError(
            'Comoving sections are defined for uniformly moving pulses only'
        )
    x = np.asarray(x, dtype=float)
    u = p.omega * x / p.c
    return p.delta_n * ENVELOPES[p.envelope](u * u)


def comoving_gradient(p, x):
    """
    dδn/dx of the comoving section
    """
    if p.variant != MOVING:
        raise WrongVariantError(
            'Comoving sections are defined for uniformly moving pulses only'
        )
    x = np.asarray(x, dtype=float)
    scale = p.omega / p.c
    return p.delta_n * scale * ENVELOPE_SLOPES[p.envelope](scale * x)


def kerr_delta_n(n2: float, intensity: float, logger=None) -> float:
    """
    Index change n2 I of the Kerr effect

    :type n2: float
    :param n2: Kerr coefficient in W^-1 cm^2
    :type intensity: float
    :param intensity: Intensity of the driving pulse in W cm^-2
    :type logger: Union[logging.Logger, logging.LoggerAdapter, None]
    :param logger: Where to report a non-perturbative result
    :rtype: float
    :returns: The dimensionless index change δn
    :raises: DomainError
    """
    logger = logger or LOGGER
    for name, value in (('n2', n2), ('intensity', intensity)):
        if not (math.isfinite(value) and value >= 0):
            raise DomainError(
                '{n} must be a finite number >= 0, got {v}'.format(n=name, v=value),
                context_dict={name: value},
            )
    dn = float(n2) * float(intensity)
    if dn >= PERTURBATIVE_WARNING:
        logger.warning(
            'Kerr index change {d:.3g} is not small; perturbation theory '
            'needs delta_n << 1'.format(d=dn)
        )
    return dn


def _at_least(big, small):
    return big >= REGIME_RATIO * small * _RATIO_SLACK


def asymptotic_regime(p):
    """
    Name the asymptotic regime a profile sits in, or None when its
    scales are not separated by at least REGIME_RATIO
    """
    if p.variant == MOVING:
        return 'moving'
    if p.variant == ACCELERATED:
        return 'accelerated'
    o1, o2, o3 = p.omega1, p.omega2, p.omega3
    if o1 == 0:
        return 'stationary'
    if math.isclose(o1, o2, rel_tol=1e-9) and math.isclose(o2, o3, rel_tol=1e-9):
        return 'one_parameter'
    if _at_least(o2, o1) and _at_least(o3, o1):
        return 'point_like'
    if _at_least(o1, o2) and _at_least(o3, o1):
        return 'needle'
    if _at_least(o1, o2) and _at_least(o1, o3):
        return 'cosmological'
    return None


def validate_profile(p, logger=None):
    """
    Check a profile against the assumptions of the perturbative treatment.
    Every warning is also logged.

    :type p: PulseProfile
    :param p: The profile to check
    :rtype: List[str]
    :returns: An empty list for a compliant profile, warnings otherwise
    """
    logger = logger or LOGGER
    warnings = []
    if p.delta_n > PERTURBATIVE_WARNING:
        warnings.append(
            'perturbativity: delta_n={d} exceeds {w}; lowest order '
            'perturbation theory needs delta_n << 1'.format(
                d=p.delta_n, w=PERTURBATIVE_WARNING
            )
        )
    if p.variant == STATIC and asymptotic_regime(p) is None:
        warnings.append(
            'regime: rates omega1={a}, omega2={b}, omega3={c} are not '
            'separated by a factor {r} and match no asymptotic regime'.format(
                a=p.omega1, b=p.omega2, c=p.omega3, r=REGIME_RATIO
            )
        )
    if p.variant == ACCELERATED:
        acc = p.trajectory.peak_acceleration
        if acc > 0 and p.omega < SMEARING_RATIO * acc:
            warnings.append(
                'unruh-validity: omega={o} is not much larger than the '
                'acceleration {a}; the pulse smears out its trajectory only '
                'for omega >> |a| (omega >= {k}|a| required)'.format(
                    o=p.omega, a=acc, k=SMEARING_RATIO
                )
            )
    for warning in warnings:
        logger.warning(warning)
    return warnings


__all__ = [
    'ACCELERATED', 'BoostedProfile', 'ENVELOPES', 'ENVELOPE_NORMS',
    'ENVELOPE_SLOPES', 'FUSED_SILICA_N2', 'MOVING', 'MaterialParams',
    'PulseProfile', 'REGIME_RATIO', 'SMEARING_RATIO', 'STATIC', 'TABULATED',
    'TRAJECTORY_KINDS', 'Trajectory', 'UNIFORM_ACCELERATION', 'UNIFORM_VELOCITY',
    'VARIANTS', 'asymptotic_regime', 'comoving_gradient', 'comoving_section',
    'evaluate_profile', 'kerr_delta_n', 'squared_argument', 'validate_profile',
]
