import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from problem.dynamics import DynamicsSpec
from problem.exceptions import PetrovViolationError
from problem.services import HypothesisService, ratios_are_stable
from problem.targets import TargetSpec


class ValidateH1Tests(SimpleTestCase):
    def test_unit_speed_passes(self):
        dyn = DynamicsSpec.unit_speed(2, n_directions=16)
        report = HypothesisService.validate_h1(dyn, [[-2.0, -2.0], [2.0, 2.0]], n_samples=200)

        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.measured['max_field_norm'], 1.0)
        self.assertEqual(report.measured['max_slope'], 0.0)
        self.assertEqual(report.witness, {})

    def test_clamped_field_respects_its_bound(self):
        dyn = DynamicsSpec.scalar_decay([-1.0, 1.0], bound_M=2.0, lipschitz_L=1.0)
        report = HypothesisService.validate_h1(dyn, [[-1.5], [1.5]], n_samples=200)

        self.assertTrue(report.passed)
        self.assertLessEqual(report.measured['max_field_norm'], 2.0 + 1e-12)

    def test_understated_lipschitz_constant_fails_with_witness(self):
        dyn = DynamicsSpec.scalar_decay([-1.0, 1.0], bound_M=2.0, lipschitz_L=0.5)
        report = HypothesisService.validate_h1(dyn, [[-1.5], [1.5]], n_samples=200)

        self.assertFalse(report.passed)
        self.assertIn('pair', report.witness)
        self.assertIn('Lipschitz', report.message)
        self.assertTrue(str(report).startswith('[FAIL] H1'))

    def test_rejects_bad_domain(self):
        dyn = DynamicsSpec.unit_speed(2)
        with self.assertRaises(ValidationError):
            HypothesisService.validate_h1(dyn, [[1.0, 1.0], [0.0, 0.0]], n_samples=10)
        with self.assertRaises(ValidationError):
            HypothesisService.validate_h1(dyn, [[0.0], [1.0]], n_samples=10)


class ValidateH3Tests(SimpleTestCase):
    def test_state_independent_field_has_zero_ratio(self):
        dyn = DynamicsSpec.unit_speed(2, n_directions=8)
        report = HypothesisService.validate_h3(dyn, [[-1.0, -1.0], [1.0, 1.0]], 100, [0.1, 0.05, 0.025])

        self.assertTrue(report.passed)
        self.assertEqual(report.measured['max_ratio'], 0.0)

    def test_kink_of_the_clamp_is_reported(self):
        dyn = DynamicsSpec.scalar_decay([-1.0, 1.0], bound_M=2.0)
        report = HypothesisService.validate_h3(dyn, [[0.5], [1.5]], 200, [0.1, 0.05, 0.025])

        self.assertFalse(report.passed)
        self.assertGreater(report.measured['max_ratio'], 0.0)
        self.assertTrue(np.isfinite(report.measured['max_ratio']))
        self.assertIn('point', report.witness)

    def test_scales_must_decrease(self):
        dyn = DynamicsSpec.unit_speed(1, controls=[[-1.0], [1.0]])
        with self.assertRaises(ValidationError):
            HypothesisService.validate_h3(dyn, [[-1.0], [1.0]], 10, [0.05, 0.1])

    def test_ratio_stability(self):
        self.assertTrue(ratios_are_stable([1.0, 1.5, 1.9]))
        self.assertFalse(ratios_are_stable([10.0, 20.0, 40.0]))
        self.assertTrue(ratios_are_stable([0.0, 0.0]))
        self.assertFalse(ratios_are_stable([1.0, np.inf]))


class PetrovTests(SimpleTestCase):
    def test_two_sided_controls_on_the_line(self):
        dyn = DynamicsSpec.unit_speed(1, controls=[[-1.0], [1.0]])
        target = TargetSpec.ball([0.0], 1.0)
        certificate = HypothesisService.estimate_petrov(dyn, target, sigma=1.0, shell_grid=32)

        self.assertAlmostEqual(certificate.mu, 1.0)
        self.assertLessEqual(certificate.replay(dyn, target), 1e-12)

    def test_direction_grid_in_the_plane(self):
        dyn = DynamicsSpec.unit_speed(2, n_directions=16)
        target = TargetSpec.ball([0.0, 0.0], 1.0)
        certificate = HypothesisService.estimate_petrov(dyn, target, sigma=1.0, shell_grid=32)

        self.assertAlmostEqual(certificate.mu, np.cos(np.pi / 16), places=9)
        self.assertLessEqual(certificate.replay(dyn, target), 1e-12)
        self.assertGreater(certificate.shell_samples, 0)

    def test_clamped_decay_pushes_inward_at_full_speed(self):
        dyn = DynamicsSpec.scalar_decay([-1.0, 1.0], bound_M=2.0)
        certificate = HypothesisService.estimate_petrov(dyn, TargetSpec.ball([0.0], 1.0), sigma=1.0, shell_grid=4)

        self.assertAlmostEqual(certificate.mu, 2.0, places=6)

    def test_one_sided_control_fails_on_the_uncovered_side(self):
        dyn = DynamicsSpec.unit_speed(1, controls=[[1.0]])
        with self.assertRaises(PetrovViolationError) as raised:
            HypothesisService.estimate_petrov(dyn, TargetSpec.ball([0.0], 1.0), sigma=1.0, shell_grid=4)

        self.assertGreater(raised.exception.point[0], 1.0)
        self.assertAlmostEqual(raised.exception.value, 1.0)

    def test_shell_points_lie_in_the_shell(self):
        target = TargetSpec.union_of_balls([[-2.0, 0.0], [2.0, 0.0]], [1.0, 1.0])
        points = HypothesisService.shell_points(target, 0.5, 16, radial_layers=3)
        distances = target.distance(points)

        self.assertTrue(np.all(distances > 0))
        self.assertTrue(np.all(distances < 0.5))

    def test_sigma_must_be_positive(self):
        dyn = DynamicsSpec.unit_speed(1, controls=[[-1.0], [1.0]])
        with self.assertRaises(ValidationError):
            HypothesisService.estimate_petrov(dyn, TargetSpec.ball([0.0], 1.0), sigma=0.0, shell_grid=4)


class DistanceSemiconcavityTests(SimpleTestCase):
    def test_ball_distance_constant_is_bounded_by_a_quarter(self):
        target = TargetSpec.ball([0.0, 0.0], 1.0)
        constant = HypothesisService.estimate_dk_semiconcavity(target, 1.0, 500, [0.1, 0.05, 0.025])

        self.assertGreaterEqual(constant, 0.0)
        self.assertLessEqual(constant, 0.25 + 1e-12)

    def test_distance_is_affine_along_rays(self):
        target = TargetSpec.ball([0.0, 0.0], 1.0)
        z1, z2 = np.array([2.0, 0.0]), np.array([3.0, 0.0])
        second = target.distance(z1) + target.distance(z2) - 2 * target.distance(0.5 * (z1 + z2))

        self.assertAlmostEqual(float(second), 0.0)

    def test_calibrate_target_records_the_constant(self):
        target = TargetSpec.ball([0.0], 1.0)
        calibrated = HypothesisService.calibrate_target(target, 0.5, 100, [0.05, 0.025])

        self.assertEqual(calibrated.dk_shell_r, 0.5)
        self.assertAlmostEqual(calibrated.dk_semiconcavity_c, 0.0)

    def test_shell_radius_must_be_positive(self):
        with self.assertRaises(ValidationError):
            HypothesisService.estimate_dk_semiconcavity(TargetSpec.ball([0.0], 1.0), 0.0, 10, [0.1])
