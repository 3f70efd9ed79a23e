"""
Test the Monte-Carlo oracle against the quadrature paths
"""
import json
import math
import os
import unittest

import numpy as np
from scipy.stats import chi2

from kerrvac.exceptions import KerrvacError, UndefinedMeanError, ZeroSampleError
from kerrvac.profiles import PulseProfile
from kerrvac.radiation import (
    ORACLE_RELATIVE, ORACLE_STANDARD_ERRORS, IntegratorSpec, angular_spectrum,
    azimuthal_spectrum, emission_rate, mc_oracle, mc_sample, mean_photon_energy,
    total_energy, total_probability,
)
from kerrvac.spectrum import analytic_spectrum, moving_spectrum


SEED = 20240917
SAMPLES = 2 ** 19
GOLDEN = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), 'fixtures', 'isotropic_golden.json'
)

# rows of proper rotations: x to y, x to z, and a quarter turn about x
ROTATE_Z = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
ROTATE_Y = np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
ROTATE_X = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


def _agrees(test, mc, exact):
    """
    Within three standard errors and two percent
    """
    test.assertLessEqual(abs(mc.value - exact), ORACLE_STANDARD_ERRORS * mc.error)
    test.assertLessEqual(abs(mc.value / exact - 1.0), ORACLE_RELATIVE)


def _chi_squared(one, two, shift=0):
    """
    χ² between two histograms, the second rolled by shift bins, over the
    bins where either has weight
    """
    weights = np.roll(two.weights, shift)
    variance = one.weight_errors ** 2 + np.roll(two.weight_errors, shift) ** 2
    used = variance > 0
    return float(np.sum((one.weights - weights)[used] ** 2 / variance[used]))


def _generic_rotation():
    a, b = 0.7, -1.1
    about_z = np.array([
        [math.cos(a), -math.sin(a), 0.0], [math.sin(a), math.cos(a), 0.0],
        [0.0, 0.0, 1.0],
    ])
    about_y = np.array([
        [math.cos(b), 0.0, math.sin(b)], [0.0, 1.0, 0.0],
        [-math.sin(b), 0.0, math.cos(b)],
    ])
    return about_z @ about_y


class TestStaticOracle(unittest.TestCase):
    """
    Test the oracle on static Gaussian pulses
    """
    def setUp(self):
        self.s = analytic_spectrum(PulseProfile.one_parameter(1.0, 0.05))

    def test_probability(self):
        exact = total_probability(self.s).value
        mc = mc_oracle(self.s, seed=SEED, n_samples=SAMPLES, observable='P')
        self.assertEqual(mc.method, 'montecarlo')
        self.assertEqual(mc.evaluations, SAMPLES)
        _agrees(self, mc, exact)

    def test_golden_probability(self):
        """
        The oracle reproduces the closed-form P of the isotropic pulse
        """
        with open(GOLDEN) as fh:
            golden = json.load(fh)
        mc = mc_oracle(self.s, seed=SEED + 1, n_samples=SAMPLES, observable='P')
        _agrees(self, mc, golden['total_probability'])

    def test_anisotropic_probability(self):
        s = analytic_spectrum(PulseProfile.static(1.0, 0.5, 2.0, 0.05, n0=1.3))
        exact = total_probability(s).value
        mc = mc_oracle(s, seed=SEED, n_samples=SAMPLES, observable='P')
        _agrees(self, mc, exact)

    def test_energies(self):
        for observable, func in (('E', mean_photon_energy), ('total_energy', total_energy)):
            with self.subTest(observable=observable):
                exact = func(self.s).value
                mc = mc_oracle(
                    self.s, seed=SEED, n_samples=SAMPLES, observable=observable
                )
                _agrees(self, mc, exact)

    def test_integrator_spec_path(self):
        """
        Observables with a Monte-Carlo spec run the oracle
        """
        spec = IntegratorSpec(method='montecarlo', seed=5, samples=2 ** 15)
        via_spec = total_probability(self.s, spec=spec)
        direct = mc_oracle(self.s, seed=5, n_samples=2 ** 15, observable='P')
        self.assertEqual(via_spec, direct)

    def test_histograms_add_up(self):
        """
        Bin weights of a run add up to its estimate of P
        """
        edges = {
            'cos_theta': np.linspace(-1.0, 1.0, 13),
            'phi': np.linspace(-math.pi, math.pi, 9),
            'chi': np.linspace(0.0, 1.0, 21),
        }
        run = mc_sample(
            self.s, seed=SEED, n_samples=2 ** 16, histograms=edges
        )
        p = run.estimate('P').value
        for variable in edges:
            with self.subTest(variable=variable):
                h = run.histogram(variable)
                self.assertAlmostEqual(h.total / p, 1.0, places=9)
                self.assertTrue(np.all(h.weight_errors >= 0))

    def test_vanishing_amplitude(self):
        s = analytic_spectrum(PulseProfile.one_parameter(1.0, 0.0))
        mc = mc_oracle(s, seed=SEED, n_samples=1024, observable='P')
        self.assertEqual((mc.value, mc.error), (0.0, 0.0))
        with self.assertRaises(UndefinedMeanError):
            mc_oracle(s, seed=SEED, n_samples=1024, observable='E')


class TestDeterminism(unittest.TestCase):
    """
    Test that estimates depend on the seed and sample count only
    """
    def setUp(self):
        self.s = analytic_spectrum(PulseProfile.one_parameter(1.0, 0.05))

    def test_same_seed(self):
        one = mc_oracle(self.s, seed=11, n_samples=2 ** 15, observable='P')
        two = mc_oracle(self.s, seed=11, n_samples=2 ** 15, observable='P')
        other = mc_oracle(self.s, seed=12, n_samples=2 ** 15, observable='P')
        self.assertEqual(one, two)
        self.assertNotEqual(one.value, other.value)

    def test_worker_count(self):
        """
        Spreading batches over processes changes nothing
        """
        edges = {'cos_theta': np.linspace(-1.0, 1.0, 13)}
        kwargs = dict(
            seed=11, n_samples=2 ** 15, batch_size=2 ** 12, histograms=edges
        )
        serial = mc_sample(self.s, workers=1, **kwargs)
        parallel = mc_sample(self.s, workers=2, **kwargs)
        np.testing.assert_array_equal(serial.sums, parallel.sums)
        np.testing.assert_array_equal(
            serial.histogram('cos_theta').weights,
            parallel.histogram('cos_theta').weights,
        )

    def test_ragged_batches(self):
        run = mc_sample(self.s, seed=3, n_samples=5000, batch_size=2048)
        self.assertEqual(run.count, 5000)


class TestDirections(unittest.TestCase):
    """
    Test the polar and azimuthal histograms of rotated static pulses
    """
    def setUp(self):
        self.needle = analytic_spectrum(PulseProfile.static(1.0, 0.3, 3.0, 0.05))
        self.iso = analytic_spectrum(PulseProfile.one_parameter(1.0, 0.05))
        self.cos_edges = np.linspace(-1.0, 1.0, 9)
        self.phi_edges = np.linspace(-math.pi, math.pi, 9)
        self.limit = chi2.ppf(0.999, 8)

    def _run(self, s, seed=SEED, rotation=None, n_samples=2 ** 18):
        return mc_sample(
            s, seed=seed, n_samples=n_samples, rotation=rotation,
            histograms={'cos_theta': self.cos_edges, 'phi': self.phi_edges},
        )

    def test_needle_azimuthal_symmetry(self):
        """
        A pulse symmetric about x emits uniformly in φ
        """
        run = self._run(self.needle)
        h = run.histogram('phi')
        self.assertAlmostEqual(h.total / run.estimate('P').value, 1.0, places=9)
        self.assertLessEqual(_chi_squared(h, azimuthal_spectrum(self.needle)), self.limit)

    def test_identity_rotation(self):
        plain = self._run(self.needle, n_samples=2 ** 15)
        same = self._run(self.needle, rotation=np.eye(3), n_samples=2 ** 15)
        np.testing.assert_array_equal(plain.sums, same.sums)
        for variable in ('cos_theta', 'phi'):
            with self.subTest(variable=variable):
                np.testing.assert_array_equal(
                    plain.histogram(variable).weights, same.histogram(variable).weights
                )

    def test_rotation_keeps_weights(self):
        """
        Rotating moves the photons but not the estimates
        """
        plain = self._run(self.needle, n_samples=2 ** 15)
        turned = self._run(self.needle, rotation=ROTATE_Y, n_samples=2 ** 15)
        np.testing.assert_array_equal(plain.sums, turned.sums)
        self.assertFalse(np.array_equal(
            plain.histogram('cos_theta').weights, turned.histogram('cos_theta').weights
        ))

    def test_turn_about_x_keeps_polar_angles(self):
        plain = self._run(self.needle, n_samples=2 ** 15)
        turned = self._run(self.needle, rotation=ROTATE_X, n_samples=2 ** 15)
        np.testing.assert_array_equal(
            plain.histogram('cos_theta').weights, turned.histogram('cos_theta').weights
        )

    def test_rotated_isotropic_pulse(self):
        """
        Any rotation of the isotropic pulse keeps its polar distribution
        """
        run = self._run(self.iso, rotation=_generic_rotation())
        exact = angular_spectrum(self.iso, bins=8)
        self.assertLessEqual(
            _chi_squared(run.histogram('cos_theta'), exact), self.limit
        )

    def test_rotate_then_compare(self):
        """
        Turning x onto z or onto y gives the same polar distribution, and
        azimuthal distributions a quarter turn apart
        """
        onto_z = self._run(self.needle, seed=SEED, rotation=ROTATE_Y)
        onto_y = self._run(self.needle, seed=SEED + 1, rotation=ROTATE_Z)
        self.assertLessEqual(
            _chi_squared(onto_z.histogram('cos_theta'), onto_y.histogram('cos_theta')),
            self.limit,
        )
        self.assertLessEqual(
            _chi_squared(onto_z.histogram('phi'), onto_y.histogram('phi'), shift=2),
            self.limit,
        )
        # the needle along z has more weight near the poles than along x
        plain = self._run(self.needle, seed=SEED + 2)
        self.assertGreater(
            _chi_squared(onto_z.histogram('cos_theta'), plain.histogram('cos_theta')),
            self.limit,
        )

    def test_azimuthal_integrator_spec_path(self):
        spec = IntegratorSpec(method='montecarlo', seed=SEED, samples=2 ** 15)
        h = azimuthal_spectrum(self.needle, spec=spec)
        self.assertEqual(h.variable, 'phi')
        self.assertEqual(len(h.weights), 8)
        self.assertAlmostEqual(
            h.total / total_probability(self.needle, spec=spec).value, 1.0, places=9
        )


class TestMovingOracle(unittest.TestCase):
    """
    Test the oracle on uniformly moving pulses
    """
    def setUp(self):
        self.fs = moving_spectrum(PulseProfile.moving(1.0, (1.2, 0.0, 0.0), 0.05))

    def test_rate(self):
        exact = emission_rate(self.fs)
        mc = mc_oracle(self.fs, seed=SEED, n_samples=SAMPLES, observable='rate')
        _agrees(self, mc, exact.rate)
        energy = mc_oracle(self.fs, seed=SEED, n_samples=SAMPLES, observable='E')
        _agrees(self, energy, exact.mean_photon_energy)

    def test_report(self):
        spec = IntegratorSpec(method='montecarlo', seed=SEED, samples=2 ** 16)
        report = emission_rate(self.fs, spec=spec)
        self.assertGreater(report.rate, 0.0)
        self.assertIsNotNone(report.theta_max)
        self.assertAlmostEqual(report.angle_table.total / report.rate, 1.0, places=9)
        self.assertEqual(report.integrator['evaluations'], 2 ** 16)

    def test_subluminal(self):
        fs = moving_spectrum(PulseProfile.moving(1.0, (0.9, 0.0, 0.0), 0.05))
        mc = mc_oracle(fs, seed=SEED, n_samples=1024, observable='rate')
        self.assertEqual((mc.value, mc.error), (0.0, 0.0))


class TestArguments(unittest.TestCase):
    """
    Test argument checks of the oracle
    """
    def setUp(self):
        self.s = analytic_spectrum(PulseProfile.one_parameter(1.0, 0.05))
        self.fs = moving_spectrum(PulseProfile.moving(1.0, (1.2, 0.0, 0.0), 0.05))

    def test_seed_is_required(self):
        with self.assertRaises(KerrvacError):
            mc_oracle(self.s, seed=None)
        with self.assertRaises(KerrvacError):
            total_probability(self.s, spec=IntegratorSpec(method='montecarlo'))

    def test_sample_count(self):
        with self.assertRaises(ZeroSampleError):
            mc_oracle(self.s, seed=1, n_samples=0)

    def test_observables(self):
        cases = [
            (self.s, 'rate'), (self.fs, 'P'), (self.fs, 'total_energy'),
            (self.s, 'momentum'),
        ]
        for s, observable in cases:
            with self.subTest(observable=observable):
                with self.assertRaises(KerrvacError):
                    mc_oracle(s, seed=1, n_samples=16, observable=observable)

    def test_histogram_variables(self):
        with self.assertRaises(KerrvacError):
            mc_sample(self.s, seed=1, n_samples=16, histograms={'theta': [0.0, 1.0]})
        with self.assertRaises(KerrvacError):
            mc_sample(self.fs, seed=1, n_samples=16, histograms={'chi': [0.0, 1.0]})

    def test_rotations(self):
        bad = [
            (self.s, np.diag([1.0, 1.0, 2.0])),
            (self.s, np.diag([1.0, 1.0, -1.0])),
            (self.s, np.eye(2)),
            (self.fs, np.eye(3)),
        ]
        for s, rotation in bad:
            with self.subTest(rotation=rotation.tolist()):
                with self.assertRaises(KerrvacError):
                    mc_sample(s, seed=1, n_samples=16, rotation=rotation)


if __name__ == '__main__':
    unittest.main()
