"""
Test the profiles package
"""
import math
import unittest

import numpy as np
from scipy.integrate import trapezoid

from kerrvac.exceptions import DomainError, ProfileError, WrongVariantError
from kerrvac.profiles import (
    ENVELOPE_NORMS, MaterialParams, PulseProfile, Trajectory,
    asymptotic_regime, comoving_gradient, comoving_section,
    evaluate_profile, kerr_delta_n, validate_profile,
)


class TestPulseProfiles(unittest.TestCase):
    """
    Test construction and evaluation of pulse profiles
    """
    def setUp(self):
        self.gaussian = PulseProfile.one_parameter(omega=1.0, delta_n=1e-3)
        self.events = [
            (0.0, (0.0, 0.0, 0.0)),
            (0.3, (0.1, -0.2, 0.5)),
            (-2.0, (1.0, 1.0, 1.0)),
            (5.0, (3.0, 0.0, -4.0)),
        ]

    def test_peak_value_is_delta_n(self):
        """
        The centre of a pulse carries the full index change
        """
        self.assertAlmostEqual(
            evaluate_profile(self.gaussian, 0.0, (0.0, 0.0, 0.0)), 1e-3
        )
        sech = PulseProfile.one_parameter(1.0, 2e-3, envelope='sech')
        self.assertAlmostEqual(evaluate_profile(sech, 0.0, (0, 0, 0)), 2e-3)

    def test_bounded_by_delta_n(self):
        """
        δn never leaves [0, δn̄]
        """
        for t, r in self.events:
            with self.subTest('Evaluating at t={t}, r={r}'.format(t=t, r=r)):
                value = evaluate_profile(self.gaussian, t, r)
                self.assertGreaterEqual(value, 0.0)
                self.assertLessEqual(value, 1e-3)

    def test_static_closed_form(self):
        """
        The static variant is δn̄ exp(-(Ω1² t² + Ω2² x²/c² + Ω3² ρ²/c²))
        """
        p = PulseProfile.static(2.0, 0.5, 3.0, 1e-3, n0=1.5)
        c = 1.0 / 1.5
        t, (x, y, z) = 0.2, (0.1, 0.05, -0.02)
        expected = 1e-3 * math.exp(
            -(4.0 * t ** 2 + (0.25 * x ** 2 + 9.0 * (y ** 2 + z ** 2)) / c ** 2)
        )
        self.assertAlmostEqual(evaluate_profile(p, t, (x, y, z)), expected)

    def test_vectorised_evaluation(self):
        """
        Arrays of events evaluate in one call
        """
        t = np.array([0.0, 0.5, 1.0])
        r = np.zeros((3, 3))
        values = evaluate_profile(self.gaussian, t, r)
        self.assertEqual(values.shape, (3,))
        np.testing.assert_allclose(values, 1e-3 * np.exp(-t ** 2))

    def test_moving_pulse_follows_velocity(self):
        """
        A moving pulse peaks at r0 + v t
        """
        p = PulseProfile.moving(1.0, (0.5, 0.0, 0.0), 1e-3)
        self.assertAlmostEqual(evaluate_profile(p, 4.0, (2.0, 0.0, 0.0)), 1e-3)
        self.assertLess(evaluate_profile(p, 4.0, (0.0, 0.0, 0.0)), 1e-3)

    def test_accelerated_pulse_follows_trajectory(self):
        """
        An accelerated pulse peaks on its trajectory
        """
        traj = Trajectory.uniform_acceleration((0.2, 0.0, 0.0))
        p = PulseProfile.accelerated(5.0, traj, 1e-3)
        self.assertAlmostEqual(evaluate_profile(p, 2.0, (0.4, 0.0, 0.0)), 1e-3)

    def test_tabulated_trajectory(self):
        """
        A spline through samples of a parabola reproduces it
        """
        times = np.linspace(-2.0, 2.0, 21)
        positions = np.stack(
            [0.5 * 0.3 * times ** 2, np.zeros_like(times), np.zeros_like(times)],
            axis=-1,
        )
        traj = Trajectory.tabulated(times, positions)
        np.testing.assert_allclose(
            traj.position(1.25), [0.5 * 0.3 * 1.25 ** 2, 0.0, 0.0], atol=1e-6
        )
        self.assertAlmostEqual(traj.peak_acceleration, 0.3, places=3)

    def test_bad_trajectories(self):
        """
        Non-monotonic sample times and short tables are rejected
        """
        with self.assertRaises(ProfileError):
            Trajectory.tabulated([0.0, 1.0, 1.0, 2.0], np.zeros((4, 3)))
        with self.assertRaises(ProfileError):
            Trajectory.tabulated([0.0, 1.0], np.zeros((2, 3)))
        with self.assertRaises(ProfileError):
            Trajectory(kind='spiral')

    def test_bad_parameters(self):
        """
        Invalid rates, materials and index changes are rejected
        """
        cases = [
            lambda: PulseProfile.one_parameter(1.0, 0.6),
            lambda: PulseProfile.one_parameter(1.0, -1e-3),
            lambda: PulseProfile.static(1.0, 0.0, 1.0, 1e-3),
            lambda: PulseProfile.static(-1.0, 1.0, 1.0, 1e-3),
            lambda: PulseProfile.moving(0.0, (2.0, 0.0, 0.0), 1e-3),
            lambda: PulseProfile.one_parameter(1.0, 1e-3, envelope='boxcar'),
            lambda: MaterialParams(n0=0.9),
            lambda: MaterialParams(n0=1.5, kerr_n2=-1.0),
            lambda: PulseProfile(variant='spinning', delta_n=1e-3),
        ]
        for i, case in enumerate(cases):
            with self.subTest('Invalid profile {i}'.format(i=i)):
                with self.assertRaises(ProfileError):
                    case()

    def test_zero_delta_n_and_stationary_are_allowed(self):
        """
        δn̄ = 0 and Ω1 = 0 are valid limiting cases
        """
        null = PulseProfile.one_parameter(1.0, 0.0)
        self.assertEqual(evaluate_profile(null, 0.0, (0, 0, 0)), 0.0)
        stationary = PulseProfile.static(0.0, 1.0, 1.0, 1e-3)
        self.assertEqual(asymptotic_regime(stationary), 'stationary')
        self.assertAlmostEqual(
            evaluate_profile(stationary, 1e6, (0, 0, 0)), 1e-3
        )

    def test_comoving_section(self):
        """
        The comoving section and its gradient match the envelope
        """
        p = PulseProfile.moving(2.0, (1.2, 0.0, 0.0), 1e-3)
        x = np.linspace(-1.0, 1.0, 5)
        np.testing.assert_allclose(
            comoving_section(p, x), 1e-3 * np.exp(-(2.0 * x) ** 2)
        )
        np.testing.assert_allclose(
            comoving_gradient(p, x),
            -2.0 * (2.0 * x) * 2.0 * 1e-3 * np.exp(-(2.0 * x) ** 2),
        )
        with self.assertRaises(WrongVariantError):
            comoving_section(self.gaussian, x)

    def test_envelope_norms(self):
        """
        The tabulated norms match ∫f² d⁴u = 2π² ∫ u³ f(u²)² du
        """
        u = np.linspace(0.0, 8.0, 80001)
        for name, f in (
            ('gaussian', np.exp(-2.0 * u ** 2)),
            ('sech', 1.0 / np.cosh(u ** 2) ** 2),
        ):
            with self.subTest('Norm of {n}'.format(n=name)):
                value = 2.0 * math.pi ** 2 * trapezoid(u ** 3 * f, u)
                self.assertAlmostEqual(value, ENVELOPE_NORMS[name], places=5)


class TestKerrAndValidation(unittest.TestCase):
    """
    Test the Kerr conversion and the profile checks
    """
    def test_kerr_delta_n(self):
        """
        Fused silica at 1e13 W/cm² gives δn = 3e-3
        """
        self.assertAlmostEqual(kerr_delta_n(3e-16, 1e13), 3e-3)
        self.assertEqual(kerr_delta_n(3e-16, 0.0), 0.0)

    def test_kerr_domain(self):
        """
        Negative inputs are outside the domain
        """
        with self.assertRaises(DomainError):
            kerr_delta_n(3e-16, -1.0)
        with self.assertRaises(DomainError):
            kerr_delta_n(-3e-16, 1.0)

    def test_kerr_large_change_warns(self):
        """
        A non-perturbative Kerr change is reported
        """
        with self.assertLogs('KERRVAC', 'WARNING'):
            self.assertAlmostEqual(kerr_delta_n(3e-16, 1e15), 0.3)

    def test_compliant_profile_has_no_warnings(self):
        """
        A small one-parameter Gaussian passes every check
        """
        p = PulseProfile.one_parameter(1.0, 1e-3)
        self.assertEqual(validate_profile(p), [])

    def test_perturbativity_warning(self):
        """
        δn̄ = 0.3 triggers the perturbativity warning
        """
        with self.assertLogs('KERRVAC', 'WARNING'):
            p = PulseProfile.one_parameter(1.0, 0.3)
            warnings = validate_profile(p)
        self.assertTrue(any('perturbativity' in w for w in warnings))

    def test_unruh_validity_warning(self):
        """
        Ω = |a|/2 cannot smear out the trajectory
        """
        traj = Trajectory.uniform_acceleration((1.0, 0.0, 0.0))
        p = PulseProfile.accelerated(0.5, traj, 1e-3)
        with self.assertLogs('KERRVAC', 'WARNING'):
            warnings = validate_profile(p)
        self.assertTrue(any('smears out its trajectory' in w for w in warnings))

    def test_regimes(self):
        """
        Rate ratios of 30 and more select the asymptotic regimes
        """
        cases = [
            ((1.0, 1.0, 1.0), 'one_parameter'),
            ((1.0, 30.0, 30.0), 'point_like'),
            ((30.0, 1.0, 1.0), 'cosmological'),
            ((30.0, 1.0, 900.0), 'needle'),
            ((1.0, 2.0, 2.0), None),
        ]
        for rates, regime in cases:
            with self.subTest('Rates {r}'.format(r=rates)):
                p = PulseProfile.static(*rates, delta_n=1e-3)
                self.assertEqual(asymptotic_regime(p), regime)

    def test_unseparated_rates_warn(self):
        """
        Rates that match no regime are reported
        """
        p = PulseProfile.static(1.0, 2.0, 2.0, 1e-3)
        with self.assertLogs('KERRVAC', 'WARNING'):
            warnings = validate_profile(p)
        self.assertTrue(any('regime' in w for w in warnings))


if __name__ == '__main__':
    unittest.main()
