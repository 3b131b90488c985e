import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from funcspace.exceptions import ShapeError
from funcspace.paths import (
    HistoryPath,
    LipschitzClassTag,
    combine,
    difference,
    lip_constant,
    sup_norm,
)

coordinates = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def sample_lists(n_rows: int):
    return st.lists(coordinates, min_size=n_rows, max_size=n_rows)


class HistoryPathTests(SimpleTestCase):
    def test_sup_norm_of_zero_path(self):
        path = HistoryPath.constant(1.0, [0.0, 0.0], n_intervals=8)
        self.assertEqual(sup_norm(path), 0.0)

    def test_sup_norm_takes_largest_absolute_sample(self):
        path = HistoryPath(1.0, [-1.0, 0.5, 0.25])
        self.assertEqual(sup_norm(path), 1.0)

    def test_sup_norm_is_euclidean_in_the_plane(self):
        path = HistoryPath(0.5, [[3.0, 4.0], [0.0, 0.0]])
        self.assertAlmostEqual(sup_norm(path), 5.0)

    def test_lip_constant_of_constant_path(self):
        self.assertEqual(lip_constant(HistoryPath.constant(0.5, 2.0)), 0.0)

    def test_lip_constant_takes_steepest_segment(self):
        self.assertAlmostEqual(lip_constant(HistoryPath(1.0, [0.0, 0.5, 1.5])), 2.0)

    def test_lip_constant_of_uniform_slope(self):
        self.assertAlmostEqual(lip_constant(HistoryPath(2.0, [0.0, 1.0, 2.0, 3.0, 4.0])), 2.0)

    @override_settings(MINTAU_HISTORY_SAMPLES=16)
    def test_constant_uses_configured_sample_count(self):
        path = HistoryPath.constant(0.5, 1.0)
        self.assertEqual(path.n_intervals, 16)
        self.assertEqual(path.shape_key, (1, 0.5, 16))

    def test_from_function_samples_on_the_grid(self):
        path = HistoryPath.from_function(1.0, lambda s: [s, 2 * s], n_intervals=4)
        np.testing.assert_allclose(path.grid, [-1.0, -0.75, -0.5, -0.25, 0.0])
        np.testing.assert_allclose(path.samples[:, 1], 2 * path.grid)
        self.assertAlmostEqual(lip_constant(path), np.sqrt(5.0))

    def test_evaluate_interpolates_linearly(self):
        path = HistoryPath(1.0, [0.0, 1.0, 3.0])
        np.testing.assert_allclose(path.evaluate(-0.75), [0.5])
        np.testing.assert_allclose(path.evaluate(np.array([-0.25, 0.0])), [[2.0], [3.0]])
        np.testing.assert_allclose(path.at_zero, [3.0])

    def test_evaluate_reproduces_samples_at_grid_points(self):
        path = HistoryPath.from_function(0.5, lambda s: np.sin(7 * s), n_intervals=10)
        np.testing.assert_array_equal(path.evaluate(path.grid), path.samples)

    def test_evaluate_outside_the_interval_fails(self):
        path = HistoryPath.constant(0.5, 1.0)
        with self.assertRaises(ValueError):
            path.evaluate(0.1)
        with self.assertRaises(ValueError):
            path.evaluate(-0.6)

    def test_samples_are_read_only(self):
        path = HistoryPath.constant(0.5, 1.0, n_intervals=4)
        with self.assertRaises(ValueError):
            path.samples[0, 0] = 2.0

    def test_invalid_paths_are_rejected(self):
        with self.assertRaises(ValidationError):
            HistoryPath(0.0, [1.0, 1.0])
        with self.assertRaises(ValidationError):
            HistoryPath(1.0, [1.0])
        with self.assertRaises(ValidationError):
            HistoryPath(1.0, [1.0, np.nan])

    def test_csv_keeps_grid_and_samples(self):
        path = HistoryPath(0.5, [[1.0, 2.0], [1.5, 2.5], [1.25, 3.0]])
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / 'history.csv'
            path.to_csv(target)
            self.assertEqual(target.read_text().splitlines()[0], 's,x_1,x_2')
            loaded = HistoryPath.from_csv(target)

        self.assertEqual(loaded.shape_key, path.shape_key)
        np.testing.assert_allclose(loaded.samples, path.samples)


class CombineTests(SimpleTestCase):
    def test_zero_coefficient_is_identity(self):
        x = HistoryPath(1.0, [1.0, 2.0, 4.0])
        h = HistoryPath(1.0, [5.0, -1.0, 0.0])
        np.testing.assert_array_equal(combine(x, h, 0.0).samples, x.samples)

    def test_cancellation(self):
        x = HistoryPath.constant(1.0, 1.0, n_intervals=4)
        h = HistoryPath.constant(1.0, 0.5, n_intervals=4)
        self.assertEqual(sup_norm(combine(x, h, -2.0)), 0.0)

    def test_samplewise_arithmetic(self):
        x = HistoryPath(1.0, [1.0, 2.0])
        h = HistoryPath(1.0, [0.1, -0.1])
        np.testing.assert_allclose(combine(x, h, 2.0).samples[:, 0], [1.2, 1.8])

    def test_difference(self):
        x = HistoryPath(1.0, [1.0, 2.0])
        y = HistoryPath(1.0, [0.5, 2.5])
        np.testing.assert_allclose(difference(x, y).samples[:, 0], [0.5, -0.5])

    def test_mismatched_grids_raise_shape_error(self):
        x = HistoryPath.constant(1.0, 1.0, n_intervals=4)
        with self.assertRaises(ShapeError):
            combine(x, HistoryPath.constant(1.0, 1.0, n_intervals=8), 1.0)
        with self.assertRaises(ShapeError):
            combine(x, HistoryPath.constant(1.0, [1.0, 1.0], n_intervals=4), 1.0)
        with self.assertRaises(ShapeError):
            combine(x, HistoryPath.constant(0.5, 1.0, n_intervals=4), 1.0)

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(sample_lists(5), sample_lists(5), coordinates)
    def test_norms_obey_the_triangle_inequality(self, xs, hs, a):
        x, h = HistoryPath(0.5, xs), HistoryPath(0.5, hs)
        combined = combine(x, h, a)
        slack = 1e-9 * (1 + sup_norm(x) + abs(a) * sup_norm(h))
        self.assertLessEqual(sup_norm(combined), sup_norm(x) + abs(a) * sup_norm(h) + slack)
        self.assertLessEqual(
            lip_constant(combined),
            lip_constant(x) + abs(a) * lip_constant(h) + 8 * slack,
        )

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(sample_lists(4), coordinates)
    def test_sup_norm_is_homogeneous(self, hs, a):
        h = HistoryPath(1.0, hs)
        zero = HistoryPath.constant(1.0, 0.0, n_intervals=3)
        self.assertAlmostEqual(sup_norm(combine(zero, h, a)), abs(a) * sup_norm(h), delta=1e-9 * (1 + abs(a) * sup_norm(h)))


class LipschitzClassTagTests(SimpleTestCase):
    def test_membership_uses_slope_test(self):
        path = HistoryPath(1.0, [0.0, 0.5, 1.5])
        self.assertTrue(LipschitzClassTag(2.0).contains(path))
        self.assertTrue(LipschitzClassTag(3.0).contains(path))
        self.assertFalse(LipschitzClassTag(1.9).contains(path))

    def test_membership_tolerates_round_off(self):
        path = HistoryPath.from_function(0.3, lambda s: 0.7 * s, n_intervals=64)
        self.assertTrue(LipschitzClassTag(0.7).contains(path))
        self.assertFalse(LipschitzClassTag(0.69).contains(path))

    def test_zero_tolerance_keeps_exact_bound(self):
        path = HistoryPath(1.0, [0.0, 0.5, 1.5])
        self.assertTrue(LipschitzClassTag(2.0).contains(path, tol=0.0))
