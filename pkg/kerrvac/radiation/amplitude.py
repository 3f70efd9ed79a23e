"""
The two-photon amplitude |A|² of a refractive index perturbation and the
reduced pair coordinates the observables integrate over.

For a pair (k, k') only the total momentum K = k + k' and the sum
s = |k| + |k'| enter the spectrum; the difference d = |k| - |k'| runs over
[-K, K] and integrates in closed form:

    ∫ d³k d³k' F = ∫ d³K ∫_K^∞ ds ∫_{-K}^{K} dd 2π (s² - d²) / (8K) F
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import gamma, gammaincc

from kerrvac.exceptions import KerrvacError, WrongVariantError
from kerrvac.profiles import STATIC
from kerrvac.spectrum import CLOSED_FORM


# Scaled distance at which Gaussian weights fall below exp(-32)
CUTOFF = 8.0


@dataclass(frozen=True)
class PairMode:
    """
    Wave vectors k and k' of the two photons of a pair
    """
    k: Tuple[float, float, float]
    k_prime: Tuple[float, float, float]

    def __post_init__(self):
        for name in ('k', 'k_prime'):
            vec = tuple(float(v) for v in getattr(self, name))
            if len(vec) != 3 or not all(map(math.isfinite, vec)):
                raise KerrvacError(
                    '{n} must be a finite 3-vector'.format(n=name)
                )
            if not any(vec):
                raise KerrvacError(
                    '{n} must be nonzero: photons have positive frequency'.format(n=name)
                )
            object.__setattr__(self, name, vec)

    def frequencies(self, n0):
        """
        ω_k and ω_k' in a medium of index n0
        """
        c = 1.0 / n0
        return (
            c * float(np.linalg.norm(self.k)),
            c * float(np.linalg.norm(self.k_prime)),
        )

    def swapped(self):
        return PairMode(self.k_prime, self.k)


def _medium_index(s, n0):
    if n0 is not None:
        return float(n0)
    if s.profile is None:
        raise KerrvacError('n0 is needed for a spectrum without a profile')
    return s.profile.n0


def pair_amplitude_sq(s, m, n0=None):
    """
    |A|² = ω_k ω_k' / n0⁶ |δñ(ω_k + ω_k', k + k')|²

    :type s: SpectralAmplitude
    :param s: Closed-form or grid spectrum of the perturbation
    :type m: PairMode
    :param m: The photon pair
    :type n0: Union[float, None]
    :param n0: Refractive index of the medium; the profile's if None
    :rtype: float
    :returns: The dimensionless pair probability density
    :raises: ExtentError when the point lies off a grid spectrum
    """
    n0 = _medium_index(s, n0)
    w1, w2 = m.frequencies(n0)
    total = np.asarray(m.k) + np.asarray(m.k_prime)
    value = s.evaluate(w1 + w2, total)
    return float(w1 * w2 / n0 ** 6 * abs(complex(value)) ** 2)


def spectral_power(s, omega, kx, kperp, outside='zero'):
    """
    |δñ(ω, (kx, kperp, 0))|² for an axially symmetric spectrum
    """
    omega = np.asarray(omega, dtype=float)
    kx, kperp = np.broadcast_arrays(
        np.asarray(kx, dtype=float), np.asarray(kperp, dtype=float)
    )
    if s.kind == CLOSED_FORM and s.formula == 'gaussian':
        p = s.profile
        c = p.c
        exponent = (
            omega ** 2 / (2.0 * p.omega1 ** 2)
            + c ** 2 * kx ** 2 / (2.0 * p.omega2 ** 2)
            + c ** 2 * kperp ** 2 / (2.0 * p.omega3 ** 2)
        )
        prefactor = p.delta_n * math.pi ** 2 * c ** 3 / (
            p.omega1 * p.omega2 * p.omega3 ** 2
        )
        return prefactor ** 2 * np.exp(-exponent)
    k = np.stack([kx, kperp, np.zeros_like(kx)], axis=-1)
    value = s.evaluate(omega, k, outside=outside)
    return value.real ** 2 + value.imag ** 2


def s_moment(n, a, K):
    """
    J_n(K) = ∫_K^∞ s^n exp(-a s²) ds, zero for K = inf
    """
    alpha = 0.5 * (n + 1)
    K = np.asarray(K, dtype=float)
    with np.errstate(over='ignore', invalid='ignore'):
        tail = gammaincc(alpha, a * K * K)
    tail = np.where(np.isinf(K), 0.0, tail)
    return gamma(alpha) * tail / (2.0 * a ** alpha)


def gaussian_pair_kernel(m, a, K, lower=None):
    """
    ∫_lower^∞ ds s^m exp(-a s²) (s⁴ - 2 s² K² / 3 + K⁴ / 5) / 16, the
    s and d integrals of the pair measure for the Gaussian family.
    m = 0 counts pairs and m = 1 weighs them by s; lower defaults to K,
    the smallest s a pair of total momentum K can have.
    """
    K = np.asarray(K, dtype=float)
    lower = K if lower is None else np.asarray(lower, dtype=float)
    K2 = K * K
    return (
        s_moment(4 + m, a, lower)
        - (2.0 / 3.0) * K2 * s_moment(2 + m, a, lower)
        + 0.2 * K2 * K2 * s_moment(m, a, lower)
    ) / 16.0


def pair_polynomial(s, K):
    """
    ∫_{-K}^{K} (kk')² dd / (2K) with kk' = (s² - d²)/4, per unit 2π
    """
    K2 = K * K
    return (s ** 4 - (2.0 / 3.0) * s * s * K2 + 0.2 * K2 * K2) / 16.0


def momentum_cutoffs(p):
    """
    Integration limits (Lx, Lperp, s_max) for a static profile: beyond them
    the pair weight is below exp(-32) of its peak
    """
    c = p.c
    tail = c * c / p.omega1 ** 2
    lx = CUTOFF / math.sqrt(c * c / p.omega2 ** 2 + tail)
    lperp = CUTOFF / math.sqrt(c * c / p.omega3 ** 2 + tail)
    return lx, lperp, CUTOFF * p.omega1 / c


def check_static_spectrum(s):
    """
    Observables integrate spectra of static profiles only
    """
    p = s.profile
    if p is None or getattr(p, 'variant', None) != STATIC:
        raise WrongVariantError(
            'Pair observables need the spectrum of a static_anisotropic profile',
            context_dict={'variant': getattr(p, 'variant', None)},
        )
    return p


def moving_power(fs, K):
    """
    |g̃|² of the isotropic comoving shape of a moving pulse at wave number K
    """
    K = np.asarray(K, dtype=float)
    p = fs.profile
    if fs.kind == CLOSED_FORM:
        return fs.peak ** 2 * np.exp(-p.c ** 2 * K * K / (2.0 * p.omega ** 2))
    speed = np.linalg.norm(fs.velocity)
    direction = np.asarray(fs.velocity) / speed if speed > 0 else np.array([1.0, 0.0, 0.0])
    return fs.spatial_abs2(K[..., None] * direction)


__all__ = [
    'CUTOFF', 'PairMode', 'check_static_spectrum', 'gaussian_pair_kernel',
    'momentum_cutoffs', 'moving_power', 'pair_amplitude_sq', 'pair_polynomial',
    's_moment', 'spectral_power',
]
