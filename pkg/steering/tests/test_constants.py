import math

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings

from steering.constants import (
    boundary_radius,
    check_semiconcavity_delay,
    derive_constants,
    lipschitz_modulus,
    lipschitz_radius,
    restricted_to_bound,
)
from steering.exceptions import DelayTooLargeError


class DeriveConstantsTests(SimpleTestCase):
    def test_small_delay(self):
        params = derive_constants(mu=1, sigma=1, M=1, M_bar=1, L=1, tau=0.1)

        self.assertAlmostEqual(params.step_coefficient, 0.2)
        self.assertAlmostEqual(params.k_contraction, math.sqrt(0.8))
        self.assertAlmostEqual(params.C_bound, 0.2 / (1 - math.sqrt(0.8)))
        self.assertAlmostEqual(params.C_bound, 1.894, places=3)
        self.assertEqual(params.delta, 1)
        self.assertAlmostEqual(params.delay_threshold, 0.5)

    def test_state_independent_field(self):
        params = derive_constants(mu=1, sigma=1, M=1, M_bar=1, L=0, tau=0.1)

        self.assertAlmostEqual(params.k_contraction, math.sqrt(3) / 2)
        self.assertAlmostEqual(params.C_bound, 1.866, places=3)
        self.assertEqual(params.delay_threshold, math.inf)
        self.assertEqual(params.delta, 1)

    def test_clamped_decay(self):
        params = derive_constants(mu=2, sigma=1, M=3, M_bar=3, L=1, tau=0.1)

        self.assertAlmostEqual(params.step_coefficient, 1.4 / 36)
        self.assertAlmostEqual(params.k_contraction, 0.9603, places=4)
        self.assertAlmostEqual(params.C_bound, 0.980, places=3)
        self.assertEqual(params.delta, 1)

    def test_delay_above_threshold(self):
        with self.assertRaises(DelayTooLargeError) as raised:
            derive_constants(mu=1, sigma=1, M=1, M_bar=1, L=1, tau=0.6)

        self.assertAlmostEqual(raised.exception.threshold, 0.5)

    def test_normalizes_M_to_at_least_mu(self):
        params = derive_constants(mu=2, sigma=1, M=1, M_bar=1, L=0, tau=0.1)
        self.assertEqual(params.M, 2)
        self.assertEqual(params.M_bar, 2)

    def test_rejects_invalid_constants(self):
        with self.assertRaises(ValidationError):
            derive_constants(mu=0, sigma=1, M=1, M_bar=1, L=0, tau=0.1)
        with self.assertRaises(ValidationError):
            derive_constants(mu=1, sigma=1, M=2, M_bar=1, L=0, tau=0.1)
        with self.assertRaises(ValidationError):
            derive_constants(mu=1, sigma=1, M=1, M_bar=1, L=-1, tau=0.1)

    @override_settings(MINTAU_MAX_STEER_ITERS=7, MINTAU_TOL_RATIO=0.1)
    def test_iteration_defaults_come_from_settings(self):
        params = derive_constants(mu=1, sigma=1, M=1, M_bar=1, L=0, tau=0.1)
        self.assertEqual(params.max_iters, 7)
        self.assertEqual(params.tol_ratio, 0.1)


class DerivedRadiiTests(SimpleTestCase):
    def test_modulus_and_radius_without_lipschitz_dependence(self):
        params = derive_constants(mu=1, sigma=1, M=1, M_bar=1, L=0, tau=0.5)
        self.assertAlmostEqual(lipschitz_modulus(params, 3.0), params.C_bound)
        self.assertAlmostEqual(lipschitz_radius(params, 3.0), params.delta)

    def test_modulus_grows_with_the_minimum_time(self):
        params = derive_constants(mu=1, sigma=1, M=1, M_bar=1, L=1, tau=0.1)
        self.assertAlmostEqual(lipschitz_modulus(params, 1.0), params.C_bound * 1.1 * math.e)
        self.assertLess(lipschitz_radius(params, 1.0), lipschitz_radius(params, 0.0))

    def test_boundary_radius_uses_constants_at_M(self):
        params = derive_constants(mu=1, sigma=1, M=1, M_bar=2, L=1, tau=0.1)
        own = restricted_to_bound(params)
        rho = boundary_radius(params, 0.5)

        self.assertEqual(own.M_bar, own.M)
        self.assertLess(2 * (1 + 2 * own.M * own.C_bound) * rho, 0.5)
        self.assertAlmostEqual(2 * (1 + 2 * own.M * own.C_bound) * rho, 0.5, places=6)

    def test_semiconcavity_delay_threshold(self):
        check_semiconcavity_delay(mu=1, M=1, L=1, tau=0.1)
        with self.assertRaises(DelayTooLargeError):
            check_semiconcavity_delay(mu=1, M=1, L=1, tau=0.2)
