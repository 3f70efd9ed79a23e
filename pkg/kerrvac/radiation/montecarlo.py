"""
Importance-sampled Monte-Carlo estimates of the pair observables, kept
independent of the quadrature paths so the two can check each other.

Samples are drawn in batches. Batch b always uses the b-th child of
SeedSequence(seed), and batch sums are reduced over a fixed binary tree,
so an estimate depends on the seed and the sample count only, never on
the number of worker processes.
"""
import logging
import math
import signal
import sys
import traceback
from dataclasses import dataclass, field
from multiprocessing.pool import Pool as ProcessPool

import numpy as np
from scipy.stats import gamma as gamma_dist

from kerrvac.exceptions import (
    EarlyExitError, KerrvacError, UndefinedMeanError, ZeroSampleError
)
from kerrvac.radiation.amplitude import check_static_spectrum, moving_power
from kerrvac.radiation.utilities import MONTECARLO, Estimate, Histogram
from kerrvac.spectrum import CLOSED_FORM, FactorizedMovingSpectrum
from kerrvac.spectrum.utilities import pairwise_sum


LOGGER = logging.getLogger('KERRVAC')

OBSERVABLES = ('P', 'E', 'total_energy', 'rate')
STATIC_VARIABLES = ('cos_theta', 'phi', 'chi')
MOVING_VARIABLES = ('theta',)
# Proposals are this much wider than the integrand in precision
WIDENING = 0.9
# Scale of the Gamma proposals for moving pulses, in units of Ω/c
RATE_SCALE = 0.6
# Agreement band of the oracle with the quadrature, in standard errors
ORACLE_STANDARD_ERRORS = 3.0
# and relative to the quadrature value
ORACLE_RELATIVE = 0.02
# Rotations must be orthogonal to this precision
ROTATION_TOLERANCE = 1e-9
# Sums kept per batch: Σw, Σw², Σwe, Σw²e, Σw²e², count
_FIELDS = 6


def _pool_init():
    """
    Process pool initializer
    """
    for sig in (signal.SIGABRT, signal.SIGTERM, signal.SIGINT):
        signal.signal(sig, signal.SIG_DFL)


def _normal_pdf(x, sigma):
    return np.exp(-0.5 * (x / sigma) ** 2) / (math.sqrt(2.0 * math.pi) * sigma)


def _static_draws(s, n0, rng, size, rotation=None):
    p = s.profile
    c = 1.0 / n0
    sigma1 = p.omega1 / c
    # wide enough for the ridge |k| < |K| along K, where s = |K| and the
    # spectrum does not decay in k
    sigma_k = sigma1
    sigma_K = np.array([
        1.0 / math.sqrt(WIDENING * (1.0 / sj ** 2 + 0.5 / sigma1 ** 2))
        for sj in (p.omega2 / p.c, p.omega3 / p.c, p.omega3 / p.c)
    ])
    k = rng.normal(0.0, sigma_k, size=(size, 3))
    K = rng.normal(0.0, 1.0, size=(size, 3)) * sigma_K
    k_prime = K - k
    kn = np.linalg.norm(k, axis=-1)
    kpn = np.linalg.norm(k_prime, axis=-1)
    omega = c * (kn + kpn)
    value = s.evaluate(omega, K, outside='zero')
    amplitude = c * c * kn * kpn / n0 ** 6 * (value.real ** 2 + value.imag ** 2)
    density = (
        np.prod(_normal_pdf(k, sigma_k), axis=-1)
        * np.prod(_normal_pdf(K, sigma_K), axis=-1)
    )
    weights = amplitude / density / (2.0 * math.pi) ** 6
    if rotation is not None:
        # the rotated profile emits the rotated pairs with the same weights
        k = k @ rotation.T
        k_prime = k_prime @ rotation.T
    extras = {
        'cos_theta': np.stack([k[:, 0] / kn, k_prime[:, 0] / kpn], axis=-1),
        'phi': np.stack(
            [np.arctan2(k[:, 2], k[:, 1]), np.arctan2(k_prime[:, 2], k_prime[:, 1])],
            axis=-1,
        ),
        'chi': (np.linalg.norm(K, axis=-1) / (kn + kpn))[:, None],
    }
    return weights, 0.5 * omega, extras


def _rate_draws(fs, n0, rng, size):
    p = fs.profile
    c = 1.0 / n0
    speed = float(np.linalg.norm(fs.velocity))
    scale = RATE_SCALE * p.omega / c
    k = rng.gamma(4.0, scale, size=size)
    u = rng.uniform(c / speed, 1.0, size=size)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=size)
    q = rng.gamma(3.0, scale, size=size)
    mismatch = k * (speed * u - c)
    valid = q > mismatch / (c + speed)
    cos_m = np.clip((c - mismatch / np.where(valid, q, 1.0)) / speed, -1.0, 1.0)
    sin_m = np.sqrt(1.0 - cos_m ** 2)
    sin_k = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    K2 = k * k + q * q + 2.0 * k * q * (u * cos_m + sin_k * sin_m * np.cos(phi))
    power = moving_power(fs, np.sqrt(np.clip(K2, 0.0, None)))
    # the photon inside the Cherenkov cone is k; the swapped half doubles it
    integrand = (
        2.0 * (2.0 * math.pi) ** -5 * c * c / (n0 ** 6 * speed)
        * 2.0 * math.pi * k ** 3 * q * q * power
    )
    density = (
        gamma_dist.pdf(k, 4.0, scale=scale) * gamma_dist.pdf(q, 3.0, scale=scale)
        / ((1.0 - c / speed) * 2.0 * math.pi)
    )
    weights = np.where(valid, integrand / density, 0.0)
    extras = {
        'theta': np.stack([np.arccos(np.clip(u, -1.0, 1.0)), np.arccos(cos_m)], axis=-1),
    }
    return weights, 0.5 * c * (k + q), extras


def _bin_sums(weights, values, edges):
    """
    Per-bin Σ and Σ² of the sample contributions; a sample with several
    photons shares its weight equally between them
    """
    size, photons = values.shape
    nb = len(edges) - 1
    contrib = np.zeros((size, nb))
    rows = np.arange(size)
    for j in range(photons):
        v = values[:, j]
        inside = (v >= edges[0]) & (v <= edges[-1])
        idx = np.clip(np.searchsorted(edges, v, side='right') - 1, 0, nb - 1)
        np.add.at(contrib, (rows[inside], idx[inside]), weights[inside] / photons)
    return np.stack([contrib.sum(axis=0), (contrib ** 2).sum(axis=0)])


def _batch(s, n0, seed, size, moving, histograms, rotation=None):
    """
    Sums of one batch of samples
    """
    rng = np.random.default_rng(seed)
    if moving:
        w, e, extras = _rate_draws(s, n0, rng, size)
    else:
        w, e, extras = _static_draws(s, n0, rng, size, rotation)
    if not np.all(np.isfinite(w)):
        raise ZeroSampleError(
            'Non-finite importance weights in a Monte-Carlo batch',
            context_dict={'batch_size': size},
        )
    w2 = w * w
    sums = np.array([
        w.sum(), w2.sum(), (w * e).sum(), (w2 * e).sum(), (w2 * e * e).sum(),
        float(size),
    ])
    binned = tuple(
        _bin_sums(w, extras[variable], np.asarray(edges))
        for variable, edges in histograms
    )
    return sums, binned


def _batch_sizes(n_samples, batch_size):
    full, rest = divmod(int(n_samples), int(batch_size))
    return [int(batch_size)] * full + ([rest] if rest else [])


def _run_batches(
    s, n0, seed, sizes, moving, histograms, workers, logger, rotation=None,
):
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers <= 1 or len(sizes) == 1:
        return [
            _batch(s, n0, child, size, moving, histograms, rotation)
            for child, size in zip(children, sizes)
        ]
    results = dict()
    with ProcessPool(min(workers, len(sizes)), initializer=_pool_init) as pool:
        for index, (child, size) in enumerate(zip(children, sizes)):
            results[index] = pool.apply_async(
                _batch, args=(s, n0, child, size, moving, histograms, rotation)
            )
        out = []
        for index in range(len(sizes)):
            try:
                out.append(results[index].get())
            except KeyboardInterrupt:
                logger.error('Monte-Carlo sampling interrupted by user.')
                raise EarlyExitError()
            except KerrvacError:
                raise
            except Exception:
                _, excp, tb = sys.exc_info()
                traces = ['{e}'.format(e=excp)]
                traces += map(str.strip, traceback.format_tb(tb))
                raise KerrvacError(
                    'Monte-Carlo batch {i} failed: {t}'.format(
                        i=index, t='\n'.join(traces)
                    ),
                    context_dict={'batch': index},
                ) from None
    return out


@dataclass(frozen=True, eq=False)
class SampleSums:
    """
    Tree-reduced sums of a Monte-Carlo run, from which every estimate
    and histogram of that run is read
    """
    sums: np.ndarray
    binned: dict = field(default_factory=dict)
    edges: dict = field(default_factory=dict)
    empty: bool = False

    @property
    def count(self):
        return int(self.sums[5])

    def estimate(self, observable):
        """
        Mean and standard error of an observable over the samples
        """
        if self.empty:
            if observable == 'E':
                raise UndefinedMeanError(
                    'Nothing is emitted; the mean photon energy is undefined'
                )
            return Estimate(0.0, 0.0, MONTECARLO, 0)
        sw, sw2, swe, sw2e, sw2e2, count = (float(v) for v in self.sums)
        if count == 0:
            raise ZeroSampleError('No usable Monte-Carlo samples')
        mean_w = sw / count
        if observable in ('P', 'rate'):
            var = max(sw2 / count - mean_w ** 2, 0.0)
            return Estimate(mean_w, math.sqrt(var / count), MONTECARLO, int(count))
        if observable == 'total_energy':
            # pair energy is twice the single photon one
            mean = 2.0 * swe / count
            var = max(4.0 * sw2e2 / count - mean ** 2, 0.0)
            return Estimate(mean, math.sqrt(var / count), MONTECARLO, int(count))
        if sw == 0:
            raise UndefinedMeanError(
                'Total weight vanishes; the mean photon energy is undefined',
                context_dict={'samples': int(count)},
            )
        ratio = swe / sw
        # delta method for the ratio Σwe / Σw
        spread = max(
            (sw2e2 - 2.0 * ratio * sw2e + ratio ** 2 * sw2) / count, 0.0
        )
        return Estimate(
            ratio, math.sqrt(spread / count) / mean_w, MONTECARLO, int(count)
        )

    def histogram(self, variable):
        """
        Per-bin means of the sample contributions with their standard errors
        """
        edges = np.asarray(self.edges[variable], dtype=float)
        if self.empty:
            zeros = np.zeros(len(edges) - 1)
            return Histogram(edges, zeros, zeros.copy(), variable)
        total, squares = self.binned[variable]
        count = float(self.sums[5])
        mean = total / count
        var = np.clip(squares / count - mean ** 2, 0.0, None)
        return Histogram(edges, mean, np.sqrt(var / count), variable)


def _validate(s, observable):
    moving = isinstance(s, FactorizedMovingSpectrum)
    if observable not in OBSERVABLES:
        raise KerrvacError(
            'Unknown observable {o!r}. Expected one of {c}'.format(
                o=observable, c=', '.join(OBSERVABLES)
            )
        )
    if observable == 'rate' and not moving:
        raise KerrvacError('The rate needs the spectrum of a moving pulse')
    if observable in ('P', 'total_energy') and moving:
        raise KerrvacError(
            '{o} of a moving pulse grows with time; sample its rate'.format(o=observable)
        )
    return moving


def _check_rotation(rotation, moving):
    if rotation is None:
        return None
    if moving:
        raise KerrvacError('Rotations apply to the spectra of static profiles only')
    out = np.asarray(rotation, dtype=float)
    if out.shape != (3, 3):
        raise KerrvacError(
            'A rotation is a 3x3 matrix', context_dict={'shape': list(out.shape)}
        )
    orthogonal = np.allclose(out @ out.T, np.eye(3), rtol=0, atol=ROTATION_TOLERANCE)
    if not orthogonal or np.linalg.det(out) <= 0:
        raise KerrvacError(
            'Not a proper rotation matrix', context_dict={'rotation': out.tolist()}
        )
    return out


def mc_sample(
    s, n0=None, seed=0, n_samples=2 ** 18, batch_size=2 ** 14, workers=1,
    histograms=None, rotation=None, logger=None,
):
    """
    Draw the samples of a Monte-Carlo run and reduce them to sums.

    Static spectra are sampled in (k, K = k + k') with Gaussian proposals
    shaped after the envelope spectrum; moving pulses are sampled in
    (|k|, cos θ_k, φ, |k'|) with Gamma proposals, k being the photon
    inside the Cherenkov cone.

    :type s: Union[SpectralAmplitude, FactorizedMovingSpectrum]
    :param s: The spectrum to integrate
    :type n0: Union[float, None]
    :param n0: Medium index; the profile's if None
    :type seed: int
    :param seed: Root of the random streams
    :type n_samples: int
    :param n_samples: Total number of samples
    :type batch_size: int
    :param batch_size: Samples per batch
    :type workers: int
    :param workers: Processes the batches are spread over
    :type histograms: Union[Dict[str, numpy.ndarray], None]
    :param histograms: Bin edges per histogrammed variable: cos_theta,
        phi and chi for static spectra, theta for moving ones. Angles are
        polar (cos_theta) and azimuthal (phi, from y towards z) about x.
    :type rotation: Union[numpy.ndarray, None]
    :param rotation: 3x3 rotation R of a static profile: the run then
        samples the profile δn(t, Rᵀr), whose pairs are the rotated pairs
        of the original with unchanged weights
    :type logger: Union[logging.Logger, None]
    :param logger: Logger for progress and failures
    :rtype: SampleSums
    :raises: ZeroSampleError, KerrvacError
    """
    logger = logger or LOGGER
    histograms = dict(histograms or {})
    if seed is None:
        raise KerrvacError('The Monte-Carlo oracle needs an explicit seed')
    if int(n_samples) < 1:
        raise ZeroSampleError(
            'No samples requested', context_dict={'n_samples': n_samples}
        )
    moving = isinstance(s, FactorizedMovingSpectrum)
    allowed = MOVING_VARIABLES if moving else STATIC_VARIABLES
    unknown = set(histograms) - set(allowed)
    if unknown:
        raise KerrvacError(
            'Cannot histogram {u}. Expected some of {a}'.format(
                u=', '.join(sorted(unknown)), a=', '.join(allowed)
            )
        )
    rotation = _check_rotation(rotation, moving)
    p = s.profile
    n0 = float(n0 if n0 is not None else p.n0)
    empty_sums = np.zeros(_FIELDS)
    if moving:
        empty = float(np.linalg.norm(s.velocity)) <= 1.0 / n0 or p.delta_n == 0
    else:
        check_static_spectrum(s)
        empty = (
            (s.kind == CLOSED_FORM and s.formula == 'stationary') or p.delta_n == 0
        )
    if empty:
        return SampleSums(empty_sums, edges=histograms, empty=True)
    sizes = _batch_sizes(n_samples, batch_size)
    logger.debug(
        'Drawing {n} samples in {b} batches'.format(n=n_samples, b=len(sizes))
    )
    order = tuple(sorted(histograms.items()))
    results = _run_batches(
        s, n0, seed, sizes, moving, order, workers, logger, rotation
    )
    table = np.stack([r[0] for r in results])
    sums = pairwise_sum(table, axis=0)
    binned = dict()
    for position, (variable, _) in enumerate(order):
        stacked = np.stack([r[1][position] for r in results])
        binned[variable] = pairwise_sum(stacked, axis=0)
    return SampleSums(sums, binned=binned, edges=histograms)


def mc_oracle(
    s, n0=None, seed=0, n_samples=2 ** 18, observable='P',
    batch_size=2 ** 14, workers=1, logger=None,
):
    """
    Monte-Carlo estimate of a pair observable: the total probability P,
    the mean photon energy E, the total radiated energy, or the emission
    rate of a moving pulse.

    :rtype: Estimate
    :returns: The estimate and its standard error
    :raises: ZeroSampleError, UndefinedMeanError, KerrvacError
    """
    _validate(s, observable)
    run = mc_sample(
        s, n0=n0, seed=seed, n_samples=n_samples, batch_size=batch_size,
        workers=workers, logger=logger,
    )
    return run.estimate(observable)


__all__ = [
    'OBSERVABLES', 'ORACLE_RELATIVE', 'ORACLE_STANDARD_ERRORS', 'SampleSums',
    'mc_oracle', 'mc_sample',
]
