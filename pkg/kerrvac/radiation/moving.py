"""
Pair emission per unit time of a uniformly moving pulse.

The spectrum 2π δ(ω - v·K) g̃(K) squares to T · 2π δ(ω - v·K) |g̃|², so
P / T follows from one δ: with v along the polar axis, photon k at
(|k|, θ_k) and its partner at (q, θ_m, φ) relative to it, energy
conservation c (|k| + q) = V (|k| cos θ_k + q cos θ_m) fixes
    cos θ_m = (c - |k| (V cos θ_k - c) / q) / V
with Jacobian 1 / (V q). Exactly one photon of a pair lies inside the
Cherenkov cone cos θ = c / V, so the integral runs over the inner photon
k and doubles.
"""
import logging
import math

import numpy as np

from kerrvac.exceptions import WrongVariantError
from kerrvac.radiation.amplitude import CUTOFF, moving_power
from kerrvac.radiation.montecarlo import mc_sample
from kerrvac.radiation.utilities import (
    MONTECARLO, QUADRATURE, Histogram, IntegratorSpec, RateReport,
    finite_or_none, gauss_legendre, refine_nodes
)
from kerrvac.spectrum import FactorizedMovingSpectrum
from kerrvac.spectrum.utilities import pairwise_sum


LOGGER = logging.getLogger('KERRVAC')

FORBIDDEN = 'kinematically forbidden'
ANGLE_BINS = 360
THETA_QUANTILE = 0.9


def weighted_quantile(values, weights, q):
    """
    Value below which a fraction q of the total weight lies
    """
    values = np.ravel(values)
    weights = np.ravel(weights)
    order = np.argsort(values, kind='stable')
    cdf = np.cumsum(weights[order])
    if cdf[-1] <= 0:
        return None
    return float(np.interp(q * cdf[-1], cdf, values[order]))


def _rate_nodes(fs, n0, n):
    """
    Nodes, weights, photon angles and pair energies of the order n rule
    """
    p = fs.profile
    c = 1.0 / n0
    speed = float(np.linalg.norm(fs.velocity))
    cone = math.acos(c / speed)
    top = CUTOFF * p.omega * speed / (c * c)
    k, kw = gauss_legendre(n, 0.0, top)
    th, thw = gauss_legendre(n, 0.0, cone)
    phi, phw = gauss_legendre(n, 0.0, math.pi)
    tau, tw = gauss_legendre(n, 0.0, 1.0)
    K_ = k[:, None, None, None]
    U = np.cos(th)[None, :, None, None]
    SK = np.sin(th)[None, :, None, None]
    PHI = phi[None, None, :, None]
    T = tau[None, None, None, :]
    mismatch = K_ * (speed * U - c)
    q_low = mismatch / (c + speed)
    # q = q_low + (top - q_low) τ² smooths the sin θ_m edge at q_low
    span = top - q_low
    q = q_low + span * T * T
    jac = 2.0 * span * T
    cos_m = np.clip((c - mismatch / q) / speed, -1.0, 1.0)
    sin_m = np.sqrt(1.0 - cos_m ** 2)
    K2 = K_ ** 2 + q * q + 2.0 * K_ * q * (U * cos_m + SK * sin_m * np.cos(PHI))
    power = moving_power(fs, np.sqrt(np.clip(K2, 0.0, None)))
    # φ on [0, π] counts twice; the outer 2 swaps inner and outer photon
    weight = (
        2.0 * (2.0 * math.pi) ** -4 * c * c / (n0 ** 6 * speed) * 2.0
        * K_ ** 3 * q * q * power * jac * SK
        * kw[:, None, None, None] * thw[None, :, None, None]
        * phw[None, None, :, None] * tw[None, None, None, :]
    )
    angles = (
        np.broadcast_to(np.arccos(U), weight.shape),
        np.broadcast_to(np.arccos(cos_m), weight.shape),
    )
    energy = 0.5 * c * (K_ + q)
    return weight, angles, energy


def emission_rate(fs, n0=None, spec=None, bins=ANGLE_BINS, logger=None):
    """
    Emission probability per unit time of a uniformly moving pulse

    :type fs: FactorizedMovingSpectrum
    :param fs: Spectrum of a uniformly_moving profile
    :type n0: Union[float, None]
    :param n0: Medium index; the profile's if None
    :type spec: Union[IntegratorSpec, None]
    :param spec: Quadrature or Monte-Carlo settings
    :type bins: int
    :param bins: Bins of the polar angle table on [0, π]
    :type logger: Union[logging.Logger, None]
    :param logger: Where convergence notes go
    :rtype: RateReport
    :returns: The rate; exactly 0 with reason 'kinematically forbidden'
        when the pulse is not faster than light in the medium
    :raises: WrongVariantError, IntegrationAccuracyError
    """
    spec = spec or IntegratorSpec()
    logger = logger or LOGGER
    if not isinstance(fs, FactorizedMovingSpectrum):
        raise WrongVariantError(
            'The emission rate needs the spectrum of a uniformly moving pulse',
            context_dict={'spectrum': type(fs).__name__},
        )
    n0 = float(n0 if n0 is not None else fs.profile.n0)
    c = 1.0 / n0
    speed = float(np.linalg.norm(fs.velocity))
    integrator = spec.metadata()
    if speed <= c:
        logger.info(
            'Pulse speed {v:.6g} does not exceed the medium light speed '
            '{c:.6g}: no pairs at lowest order'.format(v=speed, c=c)
        )
        return RateReport(
            rate=0.0, rate_error=0.0, theta_max=None, mean_photon_energy=None,
            reason=FORBIDDEN, integrator=integrator,
        )
    edges = np.linspace(0.0, math.pi, int(bins) + 1)
    if fs.profile.delta_n == 0:
        zeros = np.zeros(len(edges) - 1)
        return RateReport(
            rate=0.0, rate_error=0.0, theta_max=None, mean_photon_energy=None,
            angle_table=Histogram(edges, zeros, zeros.copy(), 'theta'),
            reason='vanishing amplitude', integrator=integrator,
        )
    if spec.method == MONTECARLO:
        run = mc_sample(
            fs, n0=n0, seed=spec.seed, n_samples=spec.samples,
            batch_size=spec.batch_size, workers=spec.workers,
            histograms={'theta': edges}, logger=logger,
        )
        rate = run.estimate('rate')
        table = run.histogram('theta')
        energy = run.estimate('E').value
        theta_max = table.quantile(THETA_QUANTILE)
        integrator['evaluations'] = rate.evaluations
        return RateReport(
            rate=rate.value, rate_error=rate.error, theta_max=theta_max,
            mean_photon_energy=finite_or_none(energy), angle_table=table,
            integrator=integrator,
        )
    orders = dict()

    def evaluate(n):
        weight, angles, energy = _rate_nodes(fs, n0, n)
        orders[n] = (weight, angles, energy)
        return pairwise_sum(weight)

    rate, error, n, spent = refine_nodes(
        evaluate, lambda n: n ** 4, spec, 'emission rate',
        start=max(8, spec.nodes // 2), logger=logger,
    )
    weight, angles, energy = orders[n]
    half = 0.5 * weight
    theta = np.concatenate([np.ravel(a) for a in angles])
    split = np.concatenate([np.ravel(half), np.ravel(half)])
    table = np.histogram(theta, bins=edges, weights=split)[0]
    coarse_weight, coarse_angles, _ = orders[n // 2]
    coarse = np.histogram(
        np.concatenate([np.ravel(a) for a in coarse_angles]), bins=edges,
        weights=np.tile(0.5 * np.ravel(coarse_weight), 2),
    )[0]
    total = float(rate)
    mean_energy = float(pairwise_sum(weight * energy)) / total if total > 0 else None
    integrator['evaluations'] = int(spent)
    integrator['nodes_used'] = int(n)
    return RateReport(
        rate=total, rate_error=float(error),
        theta_max=weighted_quantile(theta, split, THETA_QUANTILE),
        mean_photon_energy=finite_or_none(mean_energy),
        angle_table=Histogram(edges, table, np.abs(table - coarse), 'theta'),
        integrator=integrator,
    )


__all__ = ['ANGLE_BINS', 'FORBIDDEN', 'emission_rate', 'weighted_quantile']
