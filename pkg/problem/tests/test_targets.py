import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from problem.targets import TargetSpec

points = st.lists(
    st.floats(min_value=-5, max_value=5, allow_nan=False, allow_infinity=False), min_size=2, max_size=2
).map(np.array)


class TargetSpecTests(SimpleTestCase):
    def setUp(self):
        self.ball = TargetSpec.ball([0.0, 0.0], 1.0)
        self.pair = TargetSpec.union_of_balls([[-2.0, 0.0], [2.0, 0.0]], [1.0, 1.0])

    def test_distance_is_zero_inside(self):
        self.assertEqual(self.ball.distance(np.array([0.5, 0.0])), 0.0)
        self.assertTrue(self.ball.contains(np.array([0.0, 1.0])))

    def test_signed_distance_is_negative_in_the_interior(self):
        self.assertAlmostEqual(float(self.ball.signed_distance(np.array([0.25, 0.0]))), -0.75)
        self.assertAlmostEqual(float(self.ball.signed_distance(np.array([3.0, 4.0]))), 4.0)

    def test_distance_is_vectorized(self):
        z = np.array([[2.0, 0.0], [0.0, 0.0], [0.0, -3.0]])
        np.testing.assert_allclose(self.ball.distance(z), [1.0, 0.0, 2.0])

    def test_projection_onto_nearest_ball(self):
        np.testing.assert_allclose(self.pair.projection(np.array([4.0, 0.0])), [3.0, 0.0])
        np.testing.assert_allclose(self.pair.projection(np.array([-2.0, 3.0])), [-2.0, 1.0])

    def test_projection_ties_resolve_to_lowest_index(self):
        self.assertEqual(int(self.pair.nearest_ball(np.array([0.0, 0.0]))), 0)
        np.testing.assert_allclose(self.pair.projection(np.array([0.0, 0.0])), [-1.0, 0.0])

    def test_projection_inside_is_identity(self):
        z = np.array([0.2, -0.3])
        np.testing.assert_array_equal(self.ball.projection(z), z)

    def test_outward_normal(self):
        np.testing.assert_allclose(self.ball.outward_normal(np.array([0.0, 2.0])), [0.0, 1.0])
        with self.assertRaises(ValueError):
            self.ball.outward_normal(np.array([0.0, 0.0]))

    def test_invalid_targets_are_rejected(self):
        with self.assertRaises(ValidationError):
            TargetSpec.ball([0.0], 0.0)
        with self.assertRaises(ValidationError):
            TargetSpec('ball', [[0.0], [1.0]], [1.0, 1.0])
        with self.assertRaises(ValidationError):
            TargetSpec('polytope', [[0.0]], [1.0])
        with self.assertRaises(ValidationError):
            TargetSpec.union_of_balls([[0.0], [1.0]], [1.0])

    def test_with_dk_semiconcavity_keeps_geometry(self):
        calibrated = self.ball.with_dk_semiconcavity(0.25, 0.5)
        self.assertEqual(calibrated.dk_semiconcavity_c, 0.25)
        self.assertEqual(calibrated.dk_shell_r, 0.5)
        np.testing.assert_array_equal(calibrated.centers, self.ball.centers)
        self.assertIsNone(self.ball.dk_semiconcavity_c)

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(points)
    def test_projection_realizes_the_distance(self, z):
        projected = self.pair.projection(z)
        self.assertAlmostEqual(float(self.pair.distance(projected)), 0.0, delta=1e-9)
        self.assertAlmostEqual(float(np.linalg.norm(z - projected)), float(self.pair.distance(z)), delta=1e-9)
        np.testing.assert_allclose(self.pair.projection(projected), projected, atol=1e-9)

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(points, points)
    def test_distance_is_one_lipschitz(self, z, y):
        gap = abs(float(self.pair.distance(z)) - float(self.pair.distance(y)))
        self.assertLessEqual(gap, float(np.linalg.norm(z - y)) + 1e-9)
