"""
Fourier transforms δñ(ω, k) of refractive index perturbations.

The convention is fixed as
    δñ(ω, k) = ∫ dt d³r exp(iωt - ik·r) δn(t, r)
with no 2π in the forward transform. Every (2π) factor lives in the
momentum space measures of the callers.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import RegularGridInterpolator

from kerrvac.exceptions import (
    ExtentError, NotClosedFormError, ResolutionError, WrongVariantError
)
from kerrvac.profiles import (
    ENVELOPE_NORMS, MOVING, STATIC, PulseProfile, evaluate_profile
)
from kerrvac.spectrum.utilities import pairwise_sum


LOGGER = logging.getLogger('KERRVAC')

CONVENTION = 'exp(+i omega t - i k.r), no 2pi forward'
CLOSED_FORM = 'closed_form'
GRID = 'grid'
# Smallest half-width of a grid axis, in scaled widths
MIN_EXTENT = 6.0
# Smallest Nyquist frequency of a grid axis, in units of its rate.
# The Gaussian spectrum there is below 1e-10 of its peak.
MIN_NYQUIST = 10.0
PARSEVAL_TOLERANCE = 1e-6
# Points per axis of the default lattice; 128^4 complex values take
# about 4.3 GB
DEFAULT_POINTS = 128
# Points per axis of the quick lattice for scans and tests
FAST_POINTS = 48


def _per_axis(value, name, cast):
    if np.ndim(value) == 0:
        return (cast(value),) * 4
    out = tuple(cast(v) for v in value)
    if len(out) != 4:
        raise ResolutionError(
            '{n} needs 1 or 4 entries, got {v!r}'.format(n=name, v=value)
        )
    return out


@dataclass(frozen=True)
class GridSpec:
    """
    Sampling lattice for the numeric transform. points and extent are
    given per axis (t, x, y, z) or once for all of them; extent is the
    half-width of an axis in scaled widths (1/Ω1 for t, c/Ω for space).
    """
    points: Union[int, Tuple[int, int, int, int]] = DEFAULT_POINTS
    extent: Union[float, Tuple[float, float, float, float]] = MIN_EXTENT

    def __post_init__(self):
        object.__setattr__(self, 'points', _per_axis(self.points, 'points', int))
        object.__setattr__(self, 'extent', _per_axis(self.extent, 'extent', float))
        if any(n < 4 for n in self.points) or any(e <= 0 for e in self.extent):
            raise ResolutionError(
                'Grids need at least 4 points and a positive extent per axis',
                context_dict={'points': self.points, 'extent': self.extent},
            )

    @classmethod
    def fast(cls, extent=MIN_EXTENT):
        """
        A quick lattice that still passes the resolution checks at
        MIN_EXTENT
        """
        return cls(points=FAST_POINTS, extent=extent)

    def nyquist(self):
        """
        Nyquist frequency of each axis in units of the axis rate
        """
        return tuple(math.pi * n / (2.0 * e) for n, e in zip(self.points, self.extent))


@dataclass(frozen=True, eq=False)
class SpectralAmplitude:
    """
    δñ(ω, k) of a profile. kind is 'closed_form', with a named formula,
    or 'grid', with sorted axes (ω, kx, ky, kz) and the complex values
    sampled on their lattice.
    """
    kind: str
    profile: Optional[PulseProfile]
    formula: Optional[str] = None
    axes: Tuple[np.ndarray, ...] = ()
    values: Optional[np.ndarray] = None
    convention_tag: str = CONVENTION
    metadata: dict = field(default_factory=dict)

    @property
    def peak(self):
        """
        Largest modulus of the spectrum
        """
        if self.kind == GRID:
            return float(np.max(np.abs(self.values)))
        if self.formula == 'stationary':
            return math.inf
        return abs(_closed_form_prefactor(self.profile))

    @cached_property
    def _interpolators(self):
        kwargs = dict(method='linear', bounds_error=False, fill_value=np.nan)
        return (
            RegularGridInterpolator(self.axes, self.values.real, **kwargs),
            RegularGridInterpolator(self.axes, self.values.imag, **kwargs),
        )

    def evaluate(self, omega, k, outside='raise'):
        """
        δñ at frequency omega and wave vector k

        :type omega: Union[float, numpy.ndarray]
        :param omega: Frequencies, broadcast against k[..., 0]
        :type k: numpy.ndarray
        :param k: Wave vectors with a trailing axis of length 3
        :type outside: str
        :param outside: 'raise' to reject points off a grid, 'zero' to
            treat the spectrum as vanishing there
        :rtype: numpy.ndarray
        :returns: Complex values of the spectrum
        :raises: ExtentError
        """
        omega = np.asarray(omega, dtype=float)
        k = np.asarray(k, dtype=float)
        if self.kind == CLOSED_FORM:
            return _closed_form(self.profile, self.formula, omega, k)
        omega, kx = np.broadcast_arrays(omega, k[..., 0])
        points = np.stack(
            [omega, kx, np.broadcast_to(k[..., 1], kx.shape),
             np.broadcast_to(k[..., 2], kx.shape)],
            axis=-1,
        )
        re_int, im_int = self._interpolators
        out = re_int(points) + 1j * im_int(points)
        missing = np.isnan(out)
        if np.any(missing):
            if outside != 'zero':
                raise ExtentError(
                    'Spectrum evaluated outside the stored grid',
                    context_dict={
                        'points_outside': int(np.count_nonzero(missing)),
                        'bounds': [(float(a[0]), float(a[-1])) for a in self.axes],
                    },
                )
            out = np.where(missing, 0.0, out)
        return out

    __call__ = evaluate


@dataclass(frozen=True, eq=False)
class FactorizedMovingSpectrum:
    """
    Spectrum 2π δ(ω - v·k) g̃(k) of a uniformly moving pulse, kept as the
    spatial transform g̃ of its comoving shape plus the velocity that
    fixes the constraint surface ω = v·k
    """
    profile: PulseProfile
    velocity: Tuple[float, float, float]
    kind: str = CLOSED_FORM
    axes: Tuple[np.ndarray, ...] = ()
    values: Optional[np.ndarray] = None
    convention_tag: str = CONVENTION

    def frequency(self, k):
        """
        The frequency ω = v·k on the constraint surface
        """
        return np.asarray(k, dtype=float) @ np.asarray(self.velocity)

    @property
    def peak(self):
        if self.kind == GRID:
            return float(np.max(np.abs(self.values)))
        p = self.profile
        return p.delta_n * (math.sqrt(math.pi) * p.c / p.omega) ** 3

    @cached_property
    def _interpolators(self):
        kwargs = dict(method='linear', bounds_error=False, fill_value=0.0)
        return (
            RegularGridInterpolator(self.axes, self.values.real, **kwargs),
            RegularGridInterpolator(self.axes, self.values.imag, **kwargs),
        )

    def spatial(self, k):
        """
        g̃(k) = ∫ d³r exp(-ik·r) δn(0, r). A grid transform is treated as
        vanishing beyond its extent.
        """
        k = np.asarray(k, dtype=float)
        p = self.profile
        phase = np.exp(-1j * (k @ np.asarray(p.r0)))
        if self.kind == CLOSED_FORM:
            k2 = np.sum(k * k, axis=-1)
            return self.peak * np.exp(-p.c ** 2 * k2 / (4.0 * p.omega ** 2)) * phase
        re_int, im_int = self._interpolators
        return (re_int(k) + 1j * im_int(k)) * phase

    def spatial_abs2(self, k):
        """
        |g̃(k)|², the only part of the spectrum pair rates depend on
        """
        g = self.spatial(k)
        return g.real ** 2 + g.imag ** 2


def _closed_form_prefactor(p):
    return p.delta_n * math.pi ** 2 * p.c ** 3 / (p.omega1 * p.omega2 * p.omega3 ** 2)


def _closed_form(p, formula, omega, k):
    c = p.c
    omega, kx = np.broadcast_arrays(omega, k[..., 0])
    ky = np.broadcast_to(k[..., 1], kx.shape)
    kz = np.broadcast_to(k[..., 2], kx.shape)
    phase = np.exp(
        1j * (omega * p.t0 - (kx * p.r0[0] + ky * p.r0[1] + kz * p.r0[2]))
    )
    if formula == 'stationary':
        # 2π δ(ω) times the spatial transform: nothing off ω = 0
        return np.where(omega == 0.0, np.inf, 0.0).astype(complex)
    exponent = (
        omega ** 2 / (4.0 * p.omega1 ** 2)
        + c ** 2 * kx ** 2 / (4.0 * p.omega2 ** 2)
        + c ** 2 * (ky ** 2 + kz ** 2) / (4.0 * p.omega3 ** 2)
    )
    return _closed_form_prefactor(p) * np.exp(-exponent) * phase


def analytic_spectrum(p):
    """
    Closed-form transform of a static anisotropic Gaussian profile

    :type p: PulseProfile
    :param p: A static_anisotropic profile with a Gaussian envelope
    :rtype: SpectralAmplitude
    :returns: A closed-form spectrum
    :raises: NotClosedFormError
    """
    if getattr(p, 'variant', None) != STATIC:
        raise NotClosedFormError(
            'No closed-form 4D transform for the {v} variant'.format(
                v=getattr(p, 'variant', type(p).__name__)
            ),
            context_dict={'variant': getattr(p, 'variant', None)},
        )
    if p.envelope != 'gaussian':
        raise NotClosedFormError(
            'No closed-form transform for the {e} envelope'.format(e=p.envelope),
            context_dict={'envelope': p.envelope},
        )
    formula = 'stationary' if p.omega1 == 0 else 'gaussian'
    return SpectralAmplitude(
        kind=CLOSED_FORM, profile=p, formula=formula,
        metadata={'formula': formula},
    )


def _axis_widths(p):
    c = p.c
    return (1.0 / p.omega1, c / p.omega2, c / p.omega3, c / p.omega3)


def _check_grid(p, grid, strict, logger):
    problems = []
    for name, extent, nyq in zip('txyz', grid.extent, grid.nyquist()):
        if extent < MIN_EXTENT:
            problems.append(
                'axis {a} covers |u| <= {e} < {m}'.format(a=name, e=extent, m=MIN_EXTENT)
            )
        if nyq < MIN_NYQUIST:
            problems.append(
                'axis {a} Nyquist {q:.3g} is below {m} times its rate'.format(
                    a=name, q=nyq, m=MIN_NYQUIST
                )
            )
    if not problems:
        return
    msg = 'Grid too short or too coarse for the profile: {p}'.format(
        p='; '.join(problems)
    )
    if strict:
        raise ResolutionError(
            msg, context_dict={'points': grid.points, 'extent': grid.extent}
        )
    logger.warning(msg)


def numeric_spectrum(p, grid_spec=None, strict=True, workers=None, logger=None):
    """
    4D discrete transform of a static profile on a rectangular lattice,
    scaled to the continuous convention. No window is applied.

    :type p: PulseProfile
    :param p: A static_anisotropic profile with omega1 > 0
    :type grid_spec: Union[GridSpec, None]
    :param grid_spec: Lattice to sample on; GridSpec() if None
    :type strict: bool
    :param strict: Raise on short or coarse grids instead of warning
    :type workers: Union[int, None]
    :param workers: Threads handed to scipy.fft
    :type logger: Union[logging.Logger, None]
    :param logger: Where to report resolution problems
    :rtype: SpectralAmplitude
    :returns: A grid spectrum with ascending axes
    :raises: WrongVariantError, ResolutionError
    """
    logger = logger or LOGGER
    grid = grid_spec or GridSpec()
    if getattr(p, 'variant', None) != STATIC:
        raise WrongVariantError(
            'The 4D grid transform needs a static_anisotropic profile; '
            'use moving_spectrum for moving pulses',
            context_dict={'variant': getattr(p, 'variant', None)},
        )
    if p.omega1 == 0:
        raise ResolutionError(
            'A stationary profile has no temporal support to sample',
            context_dict={'omega1': 0.0},
        )
    _check_grid(p, grid, strict, logger)
    centre = (p.t0,) + tuple(p.r0)
    coords = []
    for width, n, extent, mid in zip(_axis_widths(p), grid.points, grid.extent, centre):
        step = 2.0 * extent * width / n
        coords.append(mid - extent * width + step * np.arange(n))
    t = coords[0][:, None, None, None]
    r = np.stack(
        np.meshgrid(coords[1], coords[2], coords[3], indexing='ij'), axis=-1
    )[None, ...]
    samples = evaluate_profile(p, t, r)
    steps = [c[1] - c[0] for c in coords]
    # exp(+iωt) on the time axis, exp(-ik·r) on the spatial ones
    out = sfft.ifft(samples, axis=0, workers=workers) * grid.points[0]
    out = sfft.fftn(out, axes=(1, 2, 3), workers=workers)
    axes = []
    for dim, (c, step, n) in enumerate(zip(coords, steps, grid.points)):
        freqs = 2.0 * np.pi * sfft.fftfreq(n, step)
        sign = 1.0 if dim == 0 else -1.0
        shape = [1, 1, 1, 1]
        shape[dim] = n
        out = out * np.exp(sign * 1j * freqs * c[0]).reshape(shape)
        axes.append(sfft.fftshift(freqs))
    out = sfft.fftshift(out * float(np.prod(steps)))
    out.setflags(write=False)
    for a in axes:
        a.setflags(write=False)
    return SpectralAmplitude(
        kind=GRID, profile=p, axes=tuple(axes), values=out,
        metadata={
            'points': grid.points, 'extent': grid.extent, 'window': 'none',
            'spacings': tuple(float(a[1] - a[0]) for a in axes),
            'origins': tuple(float(a[0]) for a in axes),
        },
    )


def spectrum_of(p, grid_spec=None, workers=None, logger=None):
    """
    Closed-form spectrum where one exists, the grid transform otherwise
    """
    try:
        return analytic_spectrum(p)
    except NotClosedFormError as excp:
        (logger or LOGGER).debug('{e}; using the grid transform'.format(e=excp))
        return numeric_spectrum(p, grid_spec, workers=workers, logger=logger)


def moving_spectrum(p, grid_spec=None, workers=None):
    """
    Spatial transform of the comoving shape of a uniformly moving pulse
    and its constraint surface ω = v·k

    :type p: PulseProfile
    :param p: A uniformly_moving profile
    :type grid_spec: Union[GridSpec, None]
    :param grid_spec: Lattice for envelopes without a closed form;
        only its spatial entries are used
    :rtype: FactorizedMovingSpectrum
    :raises: WrongVariantError
    """
    if getattr(p, 'variant', None) != MOVING:
        raise WrongVariantError(
            'moving_spectrum needs a uniformly_moving profile',
            context_dict={'variant': getattr(p, 'variant', None)},
        )
    if p.envelope == 'gaussian':
        return FactorizedMovingSpectrum(profile=p, velocity=p.velocity)
    grid = grid_spec or GridSpec()
    width = p.c / p.omega
    coords = []
    for n, extent in zip(grid.points[1:], grid.extent[1:]):
        step = 2.0 * extent * width / n
        coords.append(-extent * width + step * np.arange(n))
    r = np.stack(np.meshgrid(*coords, indexing='ij'), axis=-1)
    # Comoving shape centred at the origin; the r0 phase is applied on evaluation
    shape = p.replace(r0=(0.0, 0.0, 0.0))
    samples = evaluate_profile(shape, np.zeros(r.shape[:-1]), r)
    out = sfft.fftn(samples, workers=workers)
    axes = []
    for dim, (c, n) in enumerate(zip(coords, grid.points[1:])):
        step = c[1] - c[0]
        freqs = 2.0 * np.pi * sfft.fftfreq(n, step)
        view = [1, 1, 1]
        view[dim] = n
        out = out * np.exp(-1j * freqs * c[0]).reshape(view) * step
        axes.append(sfft.fftshift(freqs))
    out = sfft.fftshift(out)
    out.setflags(write=False)
    return FactorizedMovingSpectrum(
        profile=p, velocity=p.velocity, kind=GRID, axes=tuple(axes), values=out,
    )


def hermitian_error(s):
    """
    Largest violation of δñ(-ω, -k) = conj δñ(ω, k) on a grid,
    relative to the spectrum peak
    """
    if s.kind != GRID:
        return 0.0
    values = s.values
    index = tuple(
        slice(1, None) if n % 2 == 0 else slice(None) for n in values.shape
    )
    sub = values[index]
    mirrored = sub[::-1, ::-1, ::-1, ::-1]
    peak = np.max(np.abs(values))
    if peak == 0:
        return 0.0
    return float(np.max(np.abs(sub - np.conj(mirrored))) / peak)


def profile_norm(p):
    """
    ∫ |δn|² dt d³r of a static profile
    """
    if p.omega1 == 0:
        return math.inf
    return (
        p.delta_n ** 2 * ENVELOPE_NORMS[p.envelope] * p.c ** 3
        / (p.omega1 * p.omega2 * p.omega3 ** 2)
    )


def spectral_norm(s):
    """
    (2π)⁻⁴ ∫ |δñ|² dω d³k, in closed form or as a tree sum over the grid
    """
    if s.kind == CLOSED_FORM:
        p = s.profile
        if s.formula == 'stationary':
            return math.inf
        return (
            _closed_form_prefactor(p) ** 2 * p.omega1 * p.omega2 * p.omega3 ** 2
            / (4.0 * math.pi ** 2 * p.c ** 3)
        )
    cell = float(np.prod([a[1] - a[0] for a in s.axes]))
    total = pairwise_sum(s.values.real ** 2 + s.values.imag ** 2)
    return float(total) * cell / (2.0 * math.pi) ** 4


def parseval_check(p, s, logger=None):
    """
    Relative discrepancy between ∫|δn|² and (2π)⁻⁴ ∫|δñ|²

    :type p: PulseProfile
    :param p: The profile the spectrum was computed from
    :type s: SpectralAmplitude
    :param s: Its closed-form or grid spectrum
    :rtype: float
    :returns: The relative discrepancy; values above PARSEVAL_TOLERANCE
        are also logged as a warning
    """
    logger = logger or LOGGER
    lhs = profile_norm(p)
    if lhs == 0:
        return 0.0 if spectral_norm(s) == 0 else math.inf
    if math.isinf(lhs):
        return 0.0
    rhs = spectral_norm(s)
    discrepancy = abs(lhs - rhs) / lhs
    if discrepancy > PARSEVAL_TOLERANCE:
        logger.warning(
            'Parseval discrepancy {d:.3g} exceeds {t}: the grid truncates '
            'or aliases the profile'.format(d=discrepancy, t=PARSEVAL_TOLERANCE)
        )
    return discrepancy


def closed_form_error(s, floor=1e-6):
    """
    Largest relative deviation of a grid spectrum from the closed form of
    its profile, over the lattice points where the closed form is above
    floor times its peak

    :raises: NotClosedFormError when the profile has no closed form
    """
    if s.kind != GRID:
        return 0.0
    exact_spectrum = analytic_spectrum(s.profile)
    omega = s.axes[0][:, None, None, None]
    k = np.stack(np.meshgrid(*s.axes[1:], indexing='ij'), axis=-1)[None, ...]
    exact = exact_spectrum.evaluate(omega, k)
    mask = np.abs(exact) >= floor * np.max(np.abs(exact))
    if not np.any(mask):
        return 0.0
    rel = np.abs(s.values[mask] - exact[mask]) / np.abs(exact[mask])
    return float(np.max(rel))


__all__ = [
    'CLOSED_FORM', 'CONVENTION', 'DEFAULT_POINTS', 'FAST_POINTS',
    'FactorizedMovingSpectrum', 'GRID', 'GridSpec', 'MIN_EXTENT', 'MIN_NYQUIST',
    'PARSEVAL_TOLERANCE', 'SpectralAmplitude', 'analytic_spectrum',
    'closed_form_error', 'hermitian_error', 'moving_spectrum', 'numeric_spectrum', 'parseval_check',
    'profile_norm', 'spectral_norm', 'spectrum_of',
]
