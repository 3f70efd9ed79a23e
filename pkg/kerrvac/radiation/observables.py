"""
Integrated observables of the pairs emitted by a static profile: the
total probability P, the photon energies, the polar and azimuthal
distributions of single photons, the pair correlation
χ = |k + k'| / (|k| + |k'|), and the monopole estimate of the radiated
energy for point-like pulses.

With the continuum measure d³k d³k' / (2π)⁶ and |A|² = ω_k ω_k' |δñ|² / n0⁶
every pair integral reduces to
    (2π)⁻⁵ c² / n0⁶ ∫ d³K ∫_K^∞ ds |δñ(cs, K)|² (s⁴ - 2s²K²/3 + K⁴/5) / 16
and the spectra of the static family are axially symmetric about x, so
d³K = 2π K⊥ dK⊥ dKx.
"""
import logging
import math
from dataclasses import replace

import numpy as np

from kerrvac.exceptions import (
    KerrvacError, NotClosedFormError, UndefinedMeanError, WrongVariantError
)
from kerrvac.profiles import ENVELOPES, STATIC
from kerrvac.radiation.amplitude import (
    _medium_index, check_static_spectrum, gaussian_pair_kernel,
    momentum_cutoffs, pair_polynomial, spectral_power
)
from kerrvac.radiation.montecarlo import mc_sample
from kerrvac.radiation.utilities import (
    MONTECARLO, QUADRATURE, EmissionReport, Estimate, Histogram,
    IntegratorSpec, finite_or_none, gauss_legendre, perturbativity_warnings,
    refine_nodes
)
from kerrvac.spectrum import CLOSED_FORM
from kerrvac.spectrum.utilities import pairwise_sum


LOGGER = logging.getLogger('KERRVAC')

ANGULAR_BINS = 12
AZIMUTHAL_BINS = 8
CORRELATION_BINS = 20
# Bin masses carry kinks where a photon cone touches a bin edge, so the
# histograms converge more slowly than the totals
HISTOGRAM_TOLERANCE = 1e-2
# Point-like pulses need Ω1 well below both spatial rates
POINT_LIKE_RATIO = 0.2
MONOPOLE_RADIAL_NODES = 160
MONOPOLE_RADIUS = 7.0
MONOPOLE_TIME_NODES = 200
# Stencil step in units of 1/Ω1. Rounding in the five point stencil grows
# as h⁻⁴, so smaller steps lose digits; Richardson takes the truncation
# error to O(h⁴).
MONOPOLE_STEP = 1e-2


def _setup(s, n0):
    p = check_static_spectrum(s)
    n0 = _medium_index(s, n0)
    stationary = s.kind == CLOSED_FORM and s.formula == 'stationary'
    return p, n0, 1.0 / n0, stationary


def _is_gaussian(s):
    return s.kind == CLOSED_FORM and s.formula == 'gaussian'


def _measure(n0, c):
    return (2.0 * math.pi) ** -5 * c * c / n0 ** 6


def _pair_integral(s, n0, m, spec, what, logger):
    """
    (2π)⁻⁵ c^(2+m) / n0⁶ ∫ d³K ∫ ds s^m |δñ(cs, K)|² pair_polynomial(s, K)
    """
    p, n0, c, stationary = _setup(s, n0)
    if stationary or p.delta_n == 0:
        return Estimate(0.0, 0.0, QUADRATURE, 0)
    lx, lperp, s_max = momentum_cutoffs(p)
    prefactor = 2.0 * _measure(n0, c) * c ** m
    if _is_gaussian(s):
        a = c * c / (2.0 * p.omega1 ** 2)

        def evaluate(n):
            kx, wx = gauss_legendre(n, 0.0, lx)
            kp, wp = gauss_legendre(n, 0.0, lperp)
            KX, KP = kx[:, None], kp[None, :]
            K = np.hypot(KX, KP)
            integrand = (
                spectral_power(s, 0.0, KX, KP) * gaussian_pair_kernel(m, a, K)
                * 2.0 * math.pi * KP * wx[:, None] * wp[None, :]
            )
            return prefactor * pairwise_sum(integrand)

        cost = lambda n: n * n  # noqa: E731
        start = spec.nodes
    else:
        def evaluate(n):
            kx, wx = gauss_legendre(n, 0.0, lx)
            kp, wp = gauss_legendre(n, 0.0, lperp)
            rows = np.empty(n)
            for i, x in enumerate(kx):
                K = np.hypot(x, kp)
                sn, sw = gauss_legendre(n, K, K + s_max)
                power = spectral_power(s, c * sn, x, kp[:, None])
                inner = np.sum(
                    sw * power * pair_polynomial(sn, K[:, None]) * sn ** m, axis=-1
                )
                rows[i] = wx[i] * np.sum(wp * 2.0 * math.pi * kp * inner)
            return prefactor * pairwise_sum(rows)

        cost = lambda n: n ** 3  # noqa: E731
        start = max(8, spec.nodes // 2)
    value, error, n, spent = refine_nodes(
        evaluate, cost, spec, what, start=start, logger=logger
    )
    return Estimate(float(value), float(error), QUADRATURE, int(spent))


def _spec(spec):
    return spec or IntegratorSpec()


def _mc_run(s, n0, spec, histograms=None, logger=None):
    return mc_sample(
        s, n0=n0, seed=spec.seed, n_samples=spec.samples,
        batch_size=spec.batch_size, workers=spec.workers,
        histograms=histograms, logger=logger,
    )


def total_probability(s, n0=None, spec=None, logger=None):
    """
    Total probability P of creating a photon pair

    :type s: SpectralAmplitude
    :param s: Spectrum of a static profile
    :type n0: Union[float, None]
    :param n0: Medium index; the profile's if None
    :type spec: Union[IntegratorSpec, None]
    :param spec: Quadrature or Monte-Carlo settings
    :type logger: Union[logging.Logger, None]
    :param logger: Where convergence and perturbativity notes go
    :rtype: Estimate
    :returns: P with its error estimate
    :raises: IntegrationAccuracyError, WrongVariantError, KerrvacError
    """
    spec = _spec(spec)
    logger = logger or LOGGER
    if spec.method == MONTECARLO:
        check_static_spectrum(s)
        out = _mc_run(s, n0, spec, logger=logger).estimate('P')
    else:
        out = _pair_integral(s, n0, 0, spec, 'total probability', logger)
    perturbativity_warnings(out.value, logger)
    return out


def total_energy(s, n0=None, spec=None, logger=None):
    """
    ∫ (ω_k + ω_k') |A|² over the pair measure: the mean energy
    radiated by the perturbation
    """
    spec = _spec(spec)
    if spec.method == MONTECARLO:
        check_static_spectrum(s)
        return _mc_run(s, n0, spec, logger=logger).estimate('total_energy')
    return _pair_integral(s, n0, 1, spec, 'total energy', logger or LOGGER)


def mean_photon_energy(s, n0=None, spec=None, logger=None):
    """
    Mean energy of a single photon, P⁻¹ ∫ ω_k |A|². The integrand is
    symmetric under k ↔ k', so this is half the mean pair energy.

    :rtype: Estimate
    :raises: UndefinedMeanError when nothing is emitted
    """
    spec = _spec(spec)
    if spec.method == MONTECARLO:
        check_static_spectrum(s)
        return _mc_run(s, n0, spec, logger=logger).estimate('E')
    probability = total_probability(s, n0, spec, logger)
    energy = total_energy(s, n0, spec, logger)
    return _energy_ratio(probability, energy)


def _energy_ratio(probability, energy):
    if probability.value <= 0:
        raise UndefinedMeanError(
            'The total probability vanishes; the mean photon energy is undefined',
            context_dict={'total_probability': probability.value},
        )
    value = energy.value / (2.0 * probability.value)
    relative = energy.error / abs(energy.value) if energy.value else 0.0
    relative += probability.error / probability.value
    return Estimate(
        value, value * relative, probability.method,
        probability.evaluations + energy.evaluations,
    )


def _edges(bins, lower, upper):
    if int(bins) < 1:
        raise KerrvacError('Histograms need at least one bin', context_dict={'bins': bins})
    return np.linspace(lower, upper, int(bins) + 1)


def _cone_fraction(edges, A, B):
    """
    Fraction of a cone of photon directions with cos θ = A + B cos φ,
    φ uniform, that lies below each edge
    """
    t = edges.reshape((-1,) + (1,) * np.ndim(A))
    step = np.where(t >= A, 1.0, -1.0)
    ratio = np.divide(t - A, B, out=step, where=B > 0)
    return 1.0 - np.arccos(np.clip(ratio, -1.0, 1.0)) / math.pi


def angular_spectrum(s, n0=None, spec=None, bins=ANGULAR_BINS, logger=None):
    """
    Distribution of single photons over cos θ, θ being the polar angle
    from the profile's x axis. The bins have equal solid angle and their
    weights add up to P.

    A pair of total momentum K and energy sum s puts photon k on a cone
    about K; the azimuth on that cone is integrated exactly.

    :type s: SpectralAmplitude
    :param s: Spectrum of a static profile
    :type bins: int
    :param bins: Number of equal bins on [-1, 1]
    :rtype: Histogram
    :raises: IntegrationAccuracyError, WrongVariantError
    """
    spec = _spec(spec)
    logger = logger or LOGGER
    edges = _edges(bins, -1.0, 1.0)
    if spec.method == MONTECARLO:
        check_static_spectrum(s)
        run = _mc_run(s, n0, spec, histograms={'cos_theta': edges}, logger=logger)
        return run.histogram('cos_theta')
    p, n0, c, stationary = _setup(s, n0)
    zeros = np.zeros(len(edges) - 1)
    if stationary or p.delta_n == 0:
        return Histogram(edges, zeros, zeros.copy(), 'cos_theta')
    lx, lperp, s_max = momentum_cutoffs(p)
    prefactor = _measure(n0, c) / (2.0 * math.pi)

    def evaluate(n):
        kx, wx = gauss_legendre(n, -lx, lx)
        kp, wp = gauss_legendre(n, 0.0, lperp)
        out = np.zeros((len(kx), len(edges) - 1))
        for i, x in enumerate(kx):
            K = np.hypot(x, kp)
            sn, sw = gauss_legendre(n, K, K + s_max)
            dn, dw = gauss_legendre(n, -K, K)
            power = spectral_power(s, c * sn, x, kp[:, None])
            S = sn[:, :, None]
            D = dn[:, None, :]
            KK = K[:, None, None]
            gap = S * S - D * D
            # 2π (s² - d²) / 8K from the d measure, kk' = (s² - d²) / 4
            weight = (
                wp[:, None, None] * 2.0 * math.pi * kp[:, None, None]
                * sw[:, :, None] * dw[:, None, :]
                * 2.0 * math.pi * gap / (8.0 * KK) * 0.25 * gap
                * power[:, :, None]
            )
            cos_a = np.clip((KK * KK + S * D) / ((S + D) * KK), -1.0, 1.0)
            sin_a = np.sqrt(1.0 - cos_a ** 2)
            cos_b = x / KK
            sin_b = kp[:, None, None] / KK
            fraction = _cone_fraction(edges, cos_a * cos_b, sin_a * sin_b)
            masses = np.diff(fraction, axis=0)
            out[i] = wx[i] * np.sum(masses * weight, axis=(1, 2, 3))
        return prefactor * pairwise_sum(out, axis=0)

    loose = replace(spec, tolerance=max(spec.tolerance, HISTOGRAM_TOLERANCE))
    weights, errors, n, spent = refine_nodes(
        evaluate, lambda n: n ** 4, loose, 'angular spectrum',
        start=max(8, spec.nodes // 4), logger=logger,
    )
    return Histogram(edges, weights, errors, 'cos_theta')


def azimuthal_spectrum(s, n0=None, spec=None, bins=AZIMUTHAL_BINS, logger=None):
    """
    Distribution of single photons over the azimuth φ ∈ [-π, π] about the
    profile's x axis, from y towards z; the weights add up to P.

    Static spectra only depend on kx and |k⊥|, so quadrature splits P
    evenly between the bins and the Monte-Carlo path is the check.

    :rtype: Histogram
    :raises: IntegrationAccuracyError, WrongVariantError
    """
    spec = _spec(spec)
    logger = logger or LOGGER
    edges = _edges(bins, -math.pi, math.pi)
    if spec.method == MONTECARLO:
        check_static_spectrum(s)
        run = _mc_run(s, n0, spec, histograms={'phi': edges}, logger=logger)
        return run.histogram('phi')
    probability = _pair_integral(s, n0, 0, spec, 'total probability', logger)
    share = np.full(len(edges) - 1, 1.0 / (len(edges) - 1))
    return Histogram(
        edges, probability.value * share, probability.error * share, 'phi'
    )


def pair_correlation(s, n0=None, spec=None, bins=CORRELATION_BINS, logger=None):
    """
    Normalized distribution of χ = |k + k'| / (|k| + |k'|) = K / s.
    Pairs with nearly opposite momenta sit at small χ.

    :type s: SpectralAmplitude
    :param s: Spectrum of a static profile
    :type bins: int
    :param bins: Number of equal bins on [0, 1]
    :rtype: Histogram
    :returns: The distribution, summing to 1 unless nothing is emitted
    :raises: IntegrationAccuracyError, WrongVariantError
    """
    spec = _spec(spec)
    logger = logger or LOGGER
    edges = _edges(bins, 0.0, 1.0)
    if spec.method == MONTECARLO:
        check_static_spectrum(s)
        run = _mc_run(s, n0, spec, histograms={'chi': edges}, logger=logger)
        return run.histogram('chi').normalized()
    p, n0, c, stationary = _setup(s, n0)
    zeros = np.zeros(len(edges) - 1)
    if stationary or p.delta_n == 0:
        return Histogram(edges, zeros, zeros.copy(), 'chi')
    lx, lperp, s_max = momentum_cutoffs(p)
    prefactor = 2.0 * _measure(n0, c)
    if _is_gaussian(s):
        a = c * c / (2.0 * p.omega1 ** 2)
        inverse = np.divide(
            1.0, edges, out=np.full_like(edges, np.inf), where=edges > 0
        )

        def evaluate(n):
            kx, wx = gauss_legendre(n, 0.0, lx)
            kp, wp = gauss_legendre(n, 0.0, lperp)
            KX, KP = kx[:, None, None], kp[None, :, None]
            K = np.hypot(KX, KP)
            # s = K / χ, so the tail beyond each edge is a kernel from K / χ
            with np.errstate(invalid='ignore'):
                lower = np.where(np.isinf(inverse), np.inf, K * inverse)
            tails = gaussian_pair_kernel(0, a, K, lower=lower)
            masses = np.diff(tails, axis=-1)
            weight = (
                spectral_power(s, 0.0, KX, KP) * 2.0 * math.pi * KP
                * wx[:, None, None] * wp[None, :, None]
            )
            return prefactor * pairwise_sum(
                (masses * weight).reshape(-1, len(edges) - 1), axis=0
            )

        cost = lambda n: n * n * len(edges)  # noqa: E731
        start = spec.nodes
    else:
        def evaluate(n):
            kx, wx = gauss_legendre(n, 0.0, lx)
            kp, wp = gauss_legendre(n, 0.0, lperp)
            per_bin = max(4, n // 4)
            chi, cw = gauss_legendre(per_bin, edges[:-1], edges[1:])
            out = np.zeros((n, len(edges) - 1))
            for i, x in enumerate(kx):
                K = np.hypot(x, kp)[:, None, None]
                sn = K / chi
                power = spectral_power(s, c * sn, x, kp[:, None, None])
                # ds = K dχ / χ²
                integrand = power * pair_polynomial(sn, K) * K / chi ** 2
                inner = np.sum(cw * integrand, axis=-1)
                out[i] = wx[i] * np.sum(
                    (wp * 2.0 * math.pi * kp)[:, None] * inner, axis=0
                )
            return prefactor * pairwise_sum(out, axis=0)

        cost = lambda n: n * n * (len(edges) - 1) * max(4, n // 4)  # noqa: E731
        start = max(8, spec.nodes // 2)
    weights, errors, n, spent = refine_nodes(
        evaluate, cost, spec, 'pair correlation', start=start, logger=logger
    )
    return Histogram(edges, weights, errors, 'chi').normalized()


def _volume_moment(p, t):
    """
    M(t) = ∫ d³r δn(t, r), by Gauss-Legendre in the scaled radius
    """
    w, ww = gauss_legendre(MONOPOLE_RADIAL_NODES, 0.0, MONOPOLE_RADIUS)
    t = np.asarray(t, dtype=float)[..., None]
    f = ENVELOPES[p.envelope]((p.omega1 * t) ** 2 + w * w)
    volume = p.c ** 3 / (p.omega2 * p.omega3 ** 2)
    return p.delta_n * volume * 4.0 * math.pi * np.sum(ww * w * w * f, axis=-1)


def _fourth_derivative(func, t, h):
    """
    Five point central stencil, with one Richardson step
    """
    def stencil(step):
        return (
            func(t + 2 * step) - 4.0 * func(t + step) + 6.0 * func(t)
            - 4.0 * func(t - step) + func(t - 2 * step)
        ) / step ** 4

    return (4.0 * stencil(h) - stencil(2.0 * h)) / 3.0


def monopole_energy_estimate(p, method=None, step=MONOPOLE_STEP, logger=None):
    """
    ∫ dt [d⁴M/dt⁴]² with M(t) = ∫ d³r δn(t, r), the radiated energy of a
    point-like pulse up to a constant prefactor taken as 1

    :type p: PulseProfile
    :param p: A static_anisotropic profile
    :type method: Union[str, None]
    :param method: 'analytic' (Gaussian envelope only) or
        'finite_difference'; the analytic path where available if None
    :type step: float
    :param step: Stencil step of the finite differences in units of 1/Ω1.
        The default keeps both rounding and truncation near 1e-8; at
        1e-3 rounding alone is of order 1e-4.
    :type logger: Union[logging.Logger, None]
    :param logger: Where regime warnings go
    :rtype: float
    :raises: WrongVariantError, NotClosedFormError
    """
    logger = logger or LOGGER
    if getattr(p, 'variant', None) != STATIC:
        raise WrongVariantError(
            'The monopole estimate needs a static_anisotropic profile',
            context_dict={'variant': getattr(p, 'variant', None)},
        )
    if method not in (None, 'analytic', 'finite_difference'):
        raise KerrvacError('Unknown monopole method {m!r}'.format(m=method))
    if p.omega1 == 0 or p.delta_n == 0:
        return 0.0
    ratio = p.omega1 / min(p.omega2, p.omega3)
    if ratio > POINT_LIKE_RATIO:
        logger.warning(
            'regime: Omega1/min(Omega2, Omega3) = {r:.3g} exceeds {m}; the '
            'monopole estimate assumes a point-like pulse'.format(
                r=ratio, m=POINT_LIKE_RATIO
            )
        )
    if method is None:
        method = 'analytic' if p.envelope == 'gaussian' else 'finite_difference'
    if method == 'analytic':
        if p.envelope != 'gaussian':
            raise NotClosedFormError(
                'No closed-form monopole moment for the {e} envelope'.format(
                    e=p.envelope
                ),
                context_dict={'envelope': p.envelope},
            )
        moment = p.delta_n * (math.sqrt(math.pi) * p.c) ** 3 / (p.omega2 * p.omega3 ** 2)
        # ∫ (d⁴/du⁴ exp(-u²))² du = 105 √(π/2)
        return moment ** 2 * 105.0 * math.sqrt(math.pi / 2.0) * p.omega1 ** 7
    t, tw = gauss_legendre(
        MONOPOLE_TIME_NODES, -8.0 / p.omega1, 8.0 / p.omega1
    )
    d4 = _fourth_derivative(
        lambda x: _volume_moment(p, x), t, step / p.omega1
    )
    return float(np.sum(tw * d4 * d4))


def emission_report(
    s, n0=None, spec=None, angular_bins=ANGULAR_BINS,
    correlation_bins=CORRELATION_BINS, logger=None,
):
    """
    Every pair observable of a static profile in one report

    :type s: SpectralAmplitude
    :param s: Spectrum of a static profile
    :type n0: Union[float, None]
    :param n0: Medium index; the profile's if None
    :type spec: Union[IntegratorSpec, None]
    :param spec: Quadrature or Monte-Carlo settings
    :type angular_bins: int
    :param angular_bins: Bins of the cos θ histogram
    :type correlation_bins: int
    :param correlation_bins: Bins of the χ histogram
    :type logger: Union[logging.Logger, None]
    :param logger: Where warnings go
    :rtype: EmissionReport
    """
    spec = _spec(spec)
    logger = logger or LOGGER
    if spec.method == MONTECARLO:
        check_static_spectrum(s)
        run = _mc_run(
            s, n0, spec,
            histograms={
                'cos_theta': _edges(angular_bins, -1.0, 1.0),
                'chi': _edges(correlation_bins, 0.0, 1.0),
            },
            logger=logger,
        )
        probability = run.estimate('P')
        energy = run.estimate('total_energy')
        angular = run.histogram('cos_theta')
        correlation = run.histogram('chi').normalized()
        mean = run.estimate('E').value if probability.value > 0 else None
    else:
        probability = _pair_integral(s, n0, 0, spec, 'total probability', logger)
        energy = _pair_integral(s, n0, 1, spec, 'total energy', logger)
        angular = angular_spectrum(s, n0, spec, angular_bins, logger)
        correlation = pair_correlation(s, n0, spec, correlation_bins, logger)
        mean = (
            _energy_ratio(probability, energy).value
            if probability.value > 0 else None
        )
    warnings = perturbativity_warnings(probability.value, logger)
    integrator = spec.metadata()
    integrator['evaluations'] = probability.evaluations
    return EmissionReport(
        total_probability=probability.value,
        probability_error=probability.error,
        mean_photon_energy=finite_or_none(mean),
        total_energy=energy.value,
        total_energy_error=energy.error,
        angular_histogram=angular,
        correlation_histogram=correlation,
        integrator=integrator,
        perturbative_warning=bool(warnings),
        warnings=tuple(warnings),
    )


__all__ = [
    'ANGULAR_BINS', 'AZIMUTHAL_BINS', 'CORRELATION_BINS', 'MONOPOLE_STEP',
    'angular_spectrum', 'azimuthal_spectrum', 'emission_report',
    'mean_photon_energy', 'monopole_energy_estimate', 'pair_correlation',
    'total_energy', 'total_probability',
]
