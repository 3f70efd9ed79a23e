"""
Utility classes and functions for the radiation package: integrator
settings, Gauss-Legendre rules with node doubling, histograms and
report serialization
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from kerrvac.exceptions import IntegrationAccuracyError, KerrvacError
from kerrvac.spectrum.utilities import pairwise_sum, write_commented_csv


LOGGER = logging.getLogger('KERRVAC')

QUADRATURE = 'quadrature'
MONTECARLO = 'montecarlo'
METHODS = (QUADRATURE, MONTECARLO)
# Perturbation theory needs P << 1
PROBABILITY_WARNING = 0.1
HISTOGRAM_HEADER = ['bin_low', 'bin_high', 'weight', 'weight_error']


@dataclass(frozen=True)
class IntegratorSpec:
    """
    Settings shared by the deterministic and the Monte-Carlo integrators.

    nodes is the starting Gauss-Legendre order per dimension; it doubles
    until two successive orders agree to tolerance or the evaluation
    budget max_evaluations runs out. samples, batch_size, seed and
    workers drive the Monte-Carlo oracle.
    """
    method: str = QUADRATURE
    tolerance: float = 1e-3
    max_evaluations: int = 2 ** 26
    nodes: int = 48
    samples: int = 2 ** 18
    batch_size: int = 2 ** 14
    seed: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise KerrvacError(
                'Unknown integration method {m!r}. Expected one of {c}'.format(
                    m=self.method, c=', '.join(METHODS)
                )
            )
        if not (self.tolerance > 0 and self.nodes >= 2 and self.samples >= 1):
            raise KerrvacError(
                'tolerance must be positive, nodes >= 2 and samples >= 1',
                context_dict=asdict(self),
            )
        if self.batch_size < 1 or self.workers < 1 or self.max_evaluations < 1:
            raise KerrvacError(
                'batch_size, workers and max_evaluations must be positive',
                context_dict=asdict(self),
            )

    def metadata(self):
        """
        Fields that describe a result; the worker count never changes
        one, so it is left out
        """
        out = asdict(self)
        out.pop('workers')
        return out


@dataclass(frozen=True)
class Estimate:
    """
    An integral with its error estimate and the way it was obtained
    """
    value: float
    error: float
    method: str = QUADRATURE
    evaluations: int = 0

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Histogram:
    """
    Weights over the bins delimited by edges, with one error per bin
    """
    edges: np.ndarray
    weights: np.ndarray
    weight_errors: np.ndarray
    variable: str = ''

    @property
    def total(self):
        return float(pairwise_sum(self.weights))

    def normalized(self):
        """
        Copy of the histogram scaled to unit total
        """
        total = self.total
        if total == 0:
            return self
        return Histogram(
            self.edges, self.weights / total, self.weight_errors / total,
            self.variable,
        )

    def quantile(self, q):
        """
        Value of the variable below which a fraction q of the weight lies.
        The weight is taken as uniform inside each bin.
        """
        cdf = np.concatenate([[0.0], np.cumsum(self.weights)])
        if cdf[-1] <= 0:
            return None
        cdf = cdf / cdf[-1]
        return float(np.interp(q, cdf, self.edges))

    def rows(self):
        return [
            (float(lo), float(hi), float(w), float(e))
            for lo, hi, w, e in zip(
                self.edges[:-1], self.edges[1:], self.weights, self.weight_errors
            )
        ]

    def to_dict(self):
        return {
            'variable': self.variable,
            'edges': [float(e) for e in self.edges],
            'weights': [float(w) for w in self.weights],
            'weight_errors': [float(e) for e in self.weight_errors],
        }


@dataclass(frozen=True)
class EmissionReport:
    """
    Observables of the photon pairs emitted by a static profile.
    P >= 0, E > 0 whenever P > 0, the angular histogram sums to P and the
    correlation histogram to 1.
    """
    total_probability: float
    probability_error: float
    mean_photon_energy: Optional[float]
    total_energy: float
    total_energy_error: float
    angular_histogram: Optional[Histogram] = None
    correlation_histogram: Optional[Histogram] = None
    integrator: dict = field(default_factory=dict)
    perturbative_warning: bool = False
    warnings: Tuple[str, ...] = ()

    def to_dict(self):
        out = {
            'total_probability': self.total_probability,
            'probability_error': self.probability_error,
            'mean_photon_energy': self.mean_photon_energy,
            'total_energy': self.total_energy,
            'total_energy_error': self.total_energy_error,
            'integrator': dict(self.integrator),
            'perturbative_warning': self.perturbative_warning,
            'warnings': list(self.warnings),
        }
        if self.angular_histogram is not None:
            out['angular_histogram'] = self.angular_histogram.to_dict()
        if self.correlation_histogram is not None:
            out['correlation_histogram'] = self.correlation_histogram.to_dict()
            median = self.correlation_histogram.quantile(0.5)
            out['correlation_median'] = median
        return out


@dataclass(frozen=True)
class RateReport:
    """
    Pair emission per unit time of a uniformly moving pulse.
    rate is exactly 0 below the medium light speed.
    """
    rate: float
    rate_error: float
    theta_max: Optional[float]
    mean_photon_energy: Optional[float]
    angle_table: Optional[Histogram] = None
    reason: str = ''
    integrator: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            'rate': self.rate,
            'rate_error': self.rate_error,
            'theta_max': self.theta_max,
            'mean_photon_energy': self.mean_photon_energy,
            'reason': self.reason,
            'integrator': dict(self.integrator),
        }
        if self.angle_table is not None:
            out['angle_table'] = self.angle_table.to_dict()
        return out


@lru_cache(maxsize=64)
def _legendre(n):
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, lower, upper):
    """
    Gauss-Legendre nodes and weights of order n on [lower, upper].
    Array bounds add a trailing node axis.
    """
    x, w = _legendre(int(n))
    lower = np.asarray(lower, dtype=float)[..., None]
    upper = np.asarray(upper, dtype=float)[..., None]
    half = 0.5 * (upper - lower)
    return lower + half * (x + 1.0), half * w


def refine_nodes(evaluate, cost, spec, what, start=None, logger=None):
    """
    Double the quadrature order until two successive results agree.

    :type evaluate: Callable[[int], Union[float, numpy.ndarray]]
    :param evaluate: Computes the integral (or histogram) at a given order
    :type cost: Callable[[int], int]
    :param cost: Number of integrand evaluations at a given order
    :type spec: IntegratorSpec
    :param spec: Tolerance, starting order and evaluation budget
    :type what: str
    :param what: Name of the integral, for messages
    :type start: Union[int, None]
    :param start: Starting order; spec.nodes if None
    :rtype: Tuple[numpy.ndarray, numpy.ndarray, int, int]
    :returns: The finest result, the absolute difference to the previous
        order, the finest order and the evaluations spent
    :raises: IntegrationAccuracyError
    """
    logger = logger or LOGGER
    n = max(2, int(start or spec.nodes))
    spent = cost(n)
    previous = np.asarray(evaluate(n), dtype=float)
    while True:
        if spent + cost(2 * n) > spec.max_evaluations:
            raise IntegrationAccuracyError(
                '{w} did not reach tolerance {t} within {m} evaluations'.format(
                    w=what, t=spec.tolerance, m=spec.max_evaluations
                ),
                context_dict={
                    'integral': what, 'nodes': n, 'evaluations': spent,
                    'tolerance': spec.tolerance,
                },
            )
        n *= 2
        spent += cost(n)
        current = np.asarray(evaluate(n), dtype=float)
        error = np.abs(current - previous)
        scale = float(np.sum(np.abs(current)))
        if float(np.sum(error)) <= spec.tolerance * scale or scale == 0:
            logger.debug(
                '{w}: converged with {n} nodes per dimension'.format(w=what, n=n)
            )
            return current, error, n, spent
        previous = current


def write_histogram_csv(fname, histogram, config_hash=None):
    """
    Write a histogram with the columns bin_low, bin_high, weight, weight_error
    """
    return write_commented_csv(
        fname, HISTOGRAM_HEADER, histogram.rows(), config_hash
    )


def perturbativity_warnings(probability, logger=None):
    """
    Warn when a total probability is too large for lowest order theory
    """
    if probability is None or not probability > PROBABILITY_WARNING:
        return []
    msg = (
        'perturbativity: total probability {p:.3g} exceeds {w}; lowest '
        'order perturbation theory needs P << 1'.format(
            p=probability, w=PROBABILITY_WARNING
        )
    )
    (logger or LOGGER).warning(msg)
    return [msg]


def finite_or_none(value):
    if value is None or not math.isfinite(value):
        return None
    return float(value)


__all__ = [
    'EmissionReport', 'Estimate', 'HISTOGRAM_HEADER', 'Histogram',
    'IntegratorSpec', 'METHODS', 'MONTECARLO', 'PROBABILITY_WARNING',
    'QUADRATURE', 'RateReport', 'finite_or_none', 'gauss_legendre',
    'perturbativity_warnings', 'refine_nodes', 'write_histogram_csv',
]
