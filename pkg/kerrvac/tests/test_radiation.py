"""
Test the radiation package
"""
import json
import math
import os
import unittest

import numpy as np
from scipy.integrate import dblquad
from scipy.stats import linregress

from kerrvac.exceptions import (
    IntegrationAccuracyError, KerrvacError, NotClosedFormError,
    UndefinedMeanError, WrongVariantError
)
from kerrvac.profiles import PulseProfile, asymptotic_regime
from kerrvac.radiation import (
    FORBIDDEN, MONOPOLE_STEP, Histogram, IntegratorSpec, PairMode,
    angular_spectrum, azimuthal_spectrum, emission_rate, emission_report,
    gauss_legendre, mean_photon_energy, monopole_energy_estimate,
    pair_amplitude_sq, pair_correlation, pair_polynomial,
    perturbativity_warnings, refine_nodes, total_energy, total_probability,
    weighted_quantile,
)
from kerrvac.spectrum import (
    GridSpec, analytic_spectrum, moving_spectrum, numeric_spectrum
)


GOLDEN = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), 'fixtures', 'isotropic_golden.json'
)


def _static(omega1=1.0, omega2=1.0, omega3=1.0, delta_n=0.05, **kwargs):
    return analytic_spectrum(
        PulseProfile.static(omega1, omega2, omega3, delta_n, **kwargs)
    )


class TestPairAmplitude(unittest.TestCase):
    """
    Test |A|² of single photon pairs
    """
    def setUp(self):
        self.s = _static()
        self.mode = PairMode((0.0, 0.0, 1.0), (0.0, 0.0, -1.0))

    def test_back_to_back_pair(self):
        """
        Opposite momenta sample the spectrum at K = 0, ω = 2
        """
        expected = 0.05 ** 2 * math.pi ** 4 * math.exp(-2.0)
        self.assertAlmostEqual(
            pair_amplitude_sq(self.s, self.mode) / expected, 1.0, places=12
        )

    def test_swap_symmetry(self):
        """
        Swapping the photons leaves |A|² unchanged
        """
        modes = [
            PairMode((0.3, -0.1, 0.7), (1.1, 0.4, -0.2)),
            PairMode((2.0, 0.0, 0.0), (0.0, 0.5, 0.5)),
        ]
        aniso = _static(1.0, 0.5, 3.0, n0=1.4)
        for s in (self.s, aniso):
            for m in modes:
                with self.subTest(mode=m):
                    self.assertEqual(
                        pair_amplitude_sq(s, m), pair_amplitude_sq(s, m.swapped())
                    )

    def test_quadratic_in_delta_n(self):
        """
        Doubling δn̄ multiplies |A|² by four
        """
        double = _static(delta_n=0.1)
        self.assertAlmostEqual(
            pair_amplitude_sq(double, self.mode) / pair_amplitude_sq(self.s, self.mode),
            4.0, places=12,
        )

    def test_invalid_modes(self):
        """
        Photons need nonzero finite wave vectors
        """
        bad = [
            ((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
            ((1.0, 0.0), (1.0, 0.0, 0.0)),
            ((math.nan, 0.0, 0.0), (1.0, 0.0, 0.0)),
        ]
        for k, kp in bad:
            with self.subTest(k=k):
                with self.assertRaises(KerrvacError):
                    PairMode(k, kp)

    def test_pair_polynomial(self):
        """
        The closed d integral matches a direct quadrature
        """
        s, K = 2.3, 0.8
        d, w = gauss_legendre(16, -K, K)
        direct = np.sum(w * ((s * s - d * d) / 4.0) ** 2) / (2.0 * K)
        self.assertAlmostEqual(pair_polynomial(s, K) / direct, 1.0, places=12)


class TestQuadratureUtilities(unittest.TestCase):
    """
    Test Gauss-Legendre rules, node doubling and histograms
    """
    def test_gauss_legendre_is_exact_for_polynomials(self):
        x, w = gauss_legendre(6, -1.0, 3.0)
        self.assertAlmostEqual(
            np.sum(w * x ** 11) / ((3.0 ** 12 - 1.0) / 12.0), 1.0, places=12
        )
        x, w = gauss_legendre(4, np.array([0.0, 1.0]), np.array([1.0, 3.0]))
        self.assertEqual(x.shape, (2, 4))
        np.testing.assert_allclose(np.sum(w, axis=-1), [1.0, 2.0])

    def test_refine_nodes_budget(self):
        """
        Running out of evaluations is an accuracy error
        """
        spec = IntegratorSpec(max_evaluations=100)
        with self.assertRaises(IntegrationAccuracyError) as ctx:
            refine_nodes(lambda n: 1.0 / n, lambda n: n * n, spec, 'test', start=8)
        self.assertEqual(ctx.exception.context_dict['integral'], 'test')

    def test_refine_nodes_converges(self):
        spec = IntegratorSpec(tolerance=1e-6)
        value, error, n, spent = refine_nodes(
            lambda n: np.sum(gauss_legendre(n, 0.0, 1.0)[1] * np.exp(gauss_legendre(n, 0.0, 1.0)[0])),
            lambda n: n, spec, 'exp', start=4,
        )
        self.assertAlmostEqual(float(value), math.e - 1.0, places=12)
        self.assertEqual(n, 8)
        self.assertEqual(spent, 12)

    def test_integrator_spec_validation(self):
        bad = [
            dict(method='simpson'), dict(tolerance=0.0), dict(nodes=1),
            dict(workers=0), dict(batch_size=0),
        ]
        for kwargs in bad:
            with self.subTest(**kwargs):
                with self.assertRaises(KerrvacError):
                    IntegratorSpec(**kwargs)
        self.assertNotIn('workers', IntegratorSpec(workers=4).metadata())

    def test_histogram(self):
        h = Histogram(
            np.linspace(0.0, 1.0, 5), np.array([1.0, 1.0, 1.0, 1.0]),
            np.zeros(4), 'chi',
        )
        self.assertEqual(h.total, 4.0)
        self.assertAlmostEqual(h.quantile(0.5), 0.5)
        self.assertAlmostEqual(h.normalized().total, 1.0)
        self.assertEqual(h.rows()[1], (0.25, 0.5, 1.0, 0.0))

    def test_weighted_quantile(self):
        values = np.array([3.0, 1.0, 2.0, 4.0])
        weights = np.array([1.0, 1.0, 1.0, 1.0])
        self.assertAlmostEqual(weighted_quantile(values, weights, 0.5), 2.0)
        self.assertIsNone(weighted_quantile(values, np.zeros(4), 0.5))


class TestTotals(unittest.TestCase):
    """
    Test P, E and the total radiated energy of static pulses
    """
    def setUp(self):
        self.spec = IntegratorSpec()

    def test_probability_against_direct_integration(self):
        """
        The reduced quadrature matches a direct two dimensional integral
        """
        delta_n = 0.05
        c = 1.0

        def inner(s, K):
            return (
                4.0 * math.pi * K * K * math.exp(-0.5 * K * K)
                * math.exp(-0.5 * s * s) * pair_polynomial(s, K)
            )

        value, _ = dblquad(inner, 0.0, 12.0, lambda K: K, lambda K: K + 12.0)
        expected = (
            (2.0 * math.pi) ** -5 * c * c * (delta_n * math.pi ** 2) ** 2 * value
        )
        p = total_probability(_static(delta_n=delta_n), spec=self.spec)
        self.assertLess(abs(p.value / expected - 1.0), 1e-6)
        self.assertLess(p.error, 1e-3 * p.value)

    def test_golden_values(self):
        """
        The isotropic reference pulse has P = δn̄² (π/16 - 1/30) / 8 and
        total energy δn̄² 7√π / 256
        """
        with open(GOLDEN) as fh:
            golden = json.load(fh)
        self.assertAlmostEqual(
            golden['total_probability'] / (0.05 ** 2 * (math.pi / 16 - 1.0 / 30) / 8),
            1.0, places=12,
        )
        self.assertAlmostEqual(
            golden['total_energy'] / (0.05 ** 2 * 7.0 * math.sqrt(math.pi) / 256),
            1.0, places=12,
        )
        s = analytic_spectrum(PulseProfile.one_parameter(1.0, 0.05))
        cases = [
            (total_probability, 'total_probability'),
            (total_energy, 'total_energy'),
            (mean_photon_energy, 'mean_photon_energy'),
        ]
        for func, key in cases:
            with self.subTest(key=key):
                self.assertAlmostEqual(
                    func(s, spec=self.spec).value / golden[key], 1.0, delta=1e-5
                )

    def test_zero_amplitude(self):
        """
        Nothing is emitted without a perturbation
        """
        s = _static(delta_n=0.0)
        self.assertEqual(total_probability(s).value, 0.0)
        self.assertEqual(total_energy(s).value, 0.0)
        with self.assertRaises(UndefinedMeanError):
            mean_photon_energy(s)

    def test_stationary_profile(self):
        """
        A perturbation without time dependence emits nothing
        """
        s = _static(omega1=0.0)
        self.assertEqual(total_probability(s).value, 0.0)
        h = angular_spectrum(s)
        self.assertEqual(h.total, 0.0)

    def test_quadratic_law(self):
        """
        P and the radiated energy grow as δn̄²
        """
        for func in (total_probability, total_energy):
            with self.subTest(func=func.__name__):
                low = func(_static(delta_n=0.02), spec=self.spec).value
                high = func(_static(delta_n=0.04), spec=self.spec).value
                self.assertAlmostEqual(high / low, 4.0, places=9)

    def test_one_parameter_scaling(self):
        """
        P does not depend on Ω, E grows linearly with it
        """
        rates = [0.5, 1.0, 2.0, 4.0]
        probs, energies = [], []
        for omega in rates:
            s = analytic_spectrum(PulseProfile.one_parameter(omega, 0.05))
            probs.append(total_probability(s, spec=self.spec).value)
            energies.append(mean_photon_energy(s, spec=self.spec).value)
        self.assertLessEqual(max(probs) / min(probs), 1.0 + 1e-6)
        self.assertTrue(0.1 < energies[1] < 10.0)
        fit = linregress(np.log(rates), np.log(energies))
        self.assertAlmostEqual(fit.slope, 1.0, places=6)

    def test_energy_is_twice_mean_times_probability(self):
        s = _static(1.0, 0.7, 1.3, delta_n=0.05, n0=1.2)
        p = total_probability(s, spec=self.spec).value
        e = mean_photon_energy(s, spec=self.spec).value
        te = total_energy(s, spec=self.spec).value
        self.assertAlmostEqual(te / (2.0 * e * p), 1.0, places=12)

    def test_index_scaling(self):
        """
        Every rate scales with c, so P n0⁶ is independent of n0
        """
        values = []
        for n0 in (1.0, 1.5, 2.0):
            p = total_probability(_static(n0=n0), spec=self.spec).value
            values.append(p * n0 ** 6)
        np.testing.assert_allclose(values, values[0], rtol=1e-6)

    def test_point_like_regime(self):
        """
        P grows as Ω1⁶ and the energy as Ω1⁷ while Ω1 <= Ω2 / 30
        """
        rates = [0.004, 0.008, 0.016, 0.032]
        probs, energies = [], []
        for omega1 in rates:
            s = _static(omega1, 1.0, 1.0, delta_n=0.05)
            self.assertEqual(asymptotic_regime(s.profile), 'point_like')
            probs.append(total_probability(s, spec=self.spec).value)
            energies.append(total_energy(s, spec=self.spec).value)
        self.assertAlmostEqual(linregress(np.log(rates), np.log(probs)).slope, 6.0, delta=0.15)
        self.assertAlmostEqual(linregress(np.log(rates), np.log(energies)).slope, 7.0, delta=0.15)

    def test_energy_follows_monopole(self):
        """
        The radiated energy stays proportional to the monopole estimate
        """
        ratios = []
        for omega1 in (0.02, 0.04, 0.08):
            s = _static(omega1, 1.0, 1.0, delta_n=0.05)
            ratios.append(
                total_energy(s, spec=self.spec).value / monopole_energy_estimate(s.profile)
            )
        self.assertLessEqual(max(ratios) / min(ratios), 1.1)

    def test_sech_envelope_on_a_grid(self):
        """
        Grid spectra go through the s quadrature and stay quadratic
        """
        spec = IntegratorSpec(tolerance=1e-2, nodes=16)
        low = numeric_spectrum(
            PulseProfile.one_parameter(1.0, 0.02, envelope='sech'), GridSpec.fast()
        )
        high = numeric_spectrum(
            PulseProfile.one_parameter(1.0, 0.04, envelope='sech'), GridSpec.fast()
        )
        p_low = total_probability(low, spec=spec).value
        p_high = total_probability(high, spec=spec).value
        self.assertGreater(p_low, 0.0)
        self.assertAlmostEqual(p_high / p_low, 4.0, places=9)

    def test_grid_gaussian_matches_closed_form(self):
        profile = PulseProfile.one_parameter(1.0, 0.05)
        spec = IntegratorSpec(tolerance=1e-2, nodes=16)
        grid = numeric_spectrum(profile, GridSpec.fast())
        grid = total_probability(grid, spec=spec).value
        exact = total_probability(analytic_spectrum(profile), spec=spec).value
        self.assertAlmostEqual(grid / exact, 1.0, delta=0.1)

    def test_moving_spectrum_is_rejected(self):
        fs = moving_spectrum(PulseProfile.moving(1.0, (1.2, 0.0, 0.0), 0.05))
        with self.assertRaises(WrongVariantError):
            total_probability(fs)

    def test_accuracy_budget(self):
        with self.assertRaises(IntegrationAccuracyError):
            total_probability(_static(), spec=IntegratorSpec(max_evaluations=100))

    def test_perturbativity_warning(self):
        """
        Large probabilities are flagged
        """
        s = _static(omega1=30.0, omega2=0.05, omega3=0.05, delta_n=0.3)
        with self.assertLogs('KERRVAC', level='WARNING') as logs:
            p = total_probability(s)
        self.assertGreater(p.value, 0.1)
        self.assertEqual(perturbativity_warnings(0.01), [])
        self.assertTrue(any('perturbativity' in line for line in logs.output))


class TestDistributions(unittest.TestCase):
    """
    Test the angular and pair correlation histograms
    """
    def test_isotropic_angular_spectrum(self):
        """
        An isotropic pulse emits uniformly over solid angle
        """
        s = _static()
        h = angular_spectrum(s)
        p = total_probability(s).value
        self.assertEqual(len(h.weights), 12)
        self.assertAlmostEqual(h.total / p, 1.0, delta=1e-3)
        np.testing.assert_allclose(h.weights, p / 12.0, rtol=0.05)

    def test_angular_mirror_symmetry(self):
        """
        Profiles even in x emit symmetrically about the yz plane, and δn̄
        only rescales the histogram
        """
        s = _static(1.0, 0.4, 2.0)
        h = angular_spectrum(s)
        np.testing.assert_allclose(h.weights, h.weights[::-1], rtol=1e-6)
        double = angular_spectrum(_static(1.0, 0.4, 2.0, delta_n=0.1))
        np.testing.assert_allclose(
            double.normalized().weights, h.normalized().weights, rtol=1e-9
        )

    def test_needle_pulse_emits_sideways(self):
        """
        A pulse thin along y, z and long along x puts photons near cos θ = 0
        """
        h = angular_spectrum(_static(1.0, 0.3, 3.0))
        middle = h.weights[5] + h.weights[6]
        self.assertGreater(middle, h.weights[0] + h.weights[-1])

    def test_needle_pulse_is_azimuthally_symmetric(self):
        s = _static(1.0, 0.3, 3.0)
        h = azimuthal_spectrum(s)
        p = total_probability(s).value
        self.assertEqual(h.variable, 'phi')
        self.assertEqual(len(h.weights), 8)
        self.assertAlmostEqual(h.edges[0], -math.pi)
        self.assertAlmostEqual(h.edges[-1], math.pi)
        np.testing.assert_allclose(h.weights, p / 8.0, rtol=1e-12)
        self.assertAlmostEqual(h.total / p, 1.0, places=12)

    def test_correlation_normalization(self):
        h = pair_correlation(_static())
        self.assertAlmostEqual(h.total, 1.0, places=9)
        self.assertTrue(np.all(h.weights >= 0))
        self.assertEqual(h.variable, 'chi')

    def test_cosmological_pairs_are_back_to_back(self):
        """
        Ω1 >> Ω2 gives pairs with nearly opposite momenta
        """
        h = pair_correlation(_static(30.0, 1.0, 1.0))
        self.assertLessEqual(h.quantile(0.5), 0.1)

    def test_balanced_rates_spread_correlation(self):
        h = pair_correlation(_static(1.0, 1.0, 1.0))
        self.assertGreater(h.quantile(0.5), 0.2)

    def test_cosmological_volume_enhancement(self):
        """
        P grows as Ω2⁻³ while Ω1 >> Ω2 = Ω3
        """
        rates = [0.01, 0.02, 0.04, 0.08]
        probs = [
            total_probability(_static(3.0, omega2, omega2)).value
            for omega2 in rates
        ]
        slope = linregress(np.log(rates), np.log(probs)).slope
        self.assertAlmostEqual(slope, -3.0, delta=0.1)

    def test_report(self):
        report = emission_report(_static())
        out = report.to_dict()
        self.assertFalse(report.perturbative_warning)
        self.assertAlmostEqual(
            out['total_energy'] / (2.0 * out['total_probability'] * out['mean_photon_energy']),
            1.0, places=12,
        )
        self.assertEqual(len(out['angular_histogram']['weights']), 12)
        self.assertEqual(len(out['correlation_histogram']['weights']), 20)
        self.assertIn('correlation_median', out)
        self.assertNotIn('workers', out['integrator'])


class TestMonopole(unittest.TestCase):
    """
    Test the monopole estimate of the radiated energy
    """
    def setUp(self):
        self.profile = PulseProfile.static(0.05, 1.0, 1.0, 0.05)

    def test_homogeneity(self):
        """
        The estimate grows as Ω1⁷
        """
        double = self.profile.replace(omega1=0.1)
        self.assertAlmostEqual(
            monopole_energy_estimate(double) / monopole_energy_estimate(self.profile),
            128.0, places=9,
        )

    def test_finite_differences(self):
        """
        The analytic fourth derivative matches the difference stencil
        """
        analytic = monopole_energy_estimate(self.profile, method='analytic')
        numeric = monopole_energy_estimate(self.profile, method='finite_difference')
        self.assertEqual(MONOPOLE_STEP, 1e-2)
        self.assertAlmostEqual(numeric / analytic, 1.0, delta=1e-6)

    def test_short_stencil_step(self):
        """
        A 1e-3 step still agrees, within the rounding its h⁻⁴ brings
        """
        analytic = monopole_energy_estimate(self.profile, method='analytic')
        short = monopole_energy_estimate(
            self.profile, method='finite_difference', step=1e-3
        )
        self.assertAlmostEqual(short / analytic, 1.0, delta=1e-2)

    def test_time_independent(self):
        self.assertEqual(monopole_energy_estimate(self.profile.replace(omega1=0.0)), 0.0)

    def test_other_envelopes(self):
        sech = self.profile.replace(envelope='sech')
        self.assertGreater(monopole_energy_estimate(sech), 0.0)
        with self.assertRaises(NotClosedFormError):
            monopole_energy_estimate(sech, method='analytic')

    def test_regime_warning_and_variant(self):
        with self.assertLogs('KERRVAC', level='WARNING'):
            monopole_energy_estimate(PulseProfile.one_parameter(1.0, 0.05))
        with self.assertRaises(WrongVariantError):
            monopole_energy_estimate(PulseProfile.moving(1.0, (0.5, 0.0, 0.0), 0.05))


class TestEmissionRate(unittest.TestCase):
    """
    Test the pair rate of uniformly moving pulses
    """
    @staticmethod
    def _rate(speed, omega=1.0, delta_n=0.05, **kwargs):
        fs = moving_spectrum(PulseProfile.moving(omega, (speed, 0.0, 0.0), delta_n))
        return emission_rate(fs, **kwargs)

    def test_subluminal_is_forbidden(self):
        """
        Below the medium light speed nothing is emitted at all
        """
        for speed in (0.5, 0.9, 0.99, 1.0):
            with self.subTest(speed=speed):
                report = self._rate(speed)
                self.assertEqual(report.rate, 0.0)
                self.assertEqual(report.reason, FORBIDDEN)
                self.assertIsNone(report.theta_max)

    def test_medium_light_speed(self):
        """
        Kinematics use c = 1/n0, not the vacuum speed
        """
        fs = moving_spectrum(
            PulseProfile.moving(1.0, (0.8, 0.0, 0.0), 0.05, n0=1.5)
        )
        self.assertGreater(emission_rate(fs).rate, 0.0)

    def test_quadratic_law(self):
        low = self._rate(1.2, delta_n=0.02).rate
        high = self._rate(1.2, delta_n=0.04).rate
        self.assertAlmostEqual(high / low, 4.0, places=9)

    def test_linear_in_omega(self):
        """
        The rate grows as Ω, the photon energy too
        """
        one = self._rate(1.2, omega=1.0)
        two = self._rate(1.2, omega=2.0)
        self.assertAlmostEqual(two.rate / one.rate, 2.0, places=6)
        self.assertAlmostEqual(
            two.mean_photon_energy / one.mean_photon_energy, 2.0, places=6
        )
        self.assertTrue(0.1 < one.mean_photon_energy < 10.0)

    def test_cherenkov_angle(self):
        """
        θ_max shrinks as √(v - c) and the rate vanishes as v approaches c
        """
        speeds = [1.02, 1.04, 1.08, 1.16]
        reports = [self._rate(v) for v in speeds]
        thetas = [r.theta_max for r in reports]
        slope = linregress(np.log(np.array(speeds) - 1.0), np.log(thetas)).slope
        self.assertAlmostEqual(slope, 0.5, delta=0.1)
        rates = [r.rate for r in reports]
        self.assertEqual(rates, sorted(rates))

    def test_angle_table(self):
        report = self._rate(1.2)
        table = report.angle_table
        self.assertAlmostEqual(table.total / report.rate, 1.0, places=9)
        self.assertEqual(len(table.weights), 360)
        out = report.to_dict()
        self.assertEqual(out['reason'], '')
        self.assertIn('angle_table', out)

    def test_static_spectrum_is_rejected(self):
        with self.assertRaises(WrongVariantError):
            emission_rate(_static())


if __name__ == '__main__':
    unittest.main()
