import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings
from hypothesis import given
from hypothesis import strategies as st

from .exceptions import DimensionMismatchError, IndeterminateFormError
from .models import MINUS_INF, PLUS_INF, ExtendedReal, PairedPoint, TolerancePolicy, WeightedNorm
from .strategies import coordinates, paired_point_tuples, weights
from .utils import coupling, extended_max, extended_min, pair_dot, weighted_norm

TOL_EXACT = 1e-9


def pp(x, xstar):
    return PairedPoint(np.atleast_1d(x), np.atleast_1d(xstar))


class PairedPointTests(SimpleTestCase):
    def test_rejects_mismatched_lengths(self):
        """Test that primal and dual halves must share a length"""
        with self.assertRaises(ValidationError):
            PairedPoint([1.0, 2.0], [1.0])

    def test_rejects_non_finite_coordinates(self):
        """Test rejecting infinite coordinates"""
        with self.assertRaises(ValidationError):
            PairedPoint([math.inf], [0.0])

    def test_rejects_empty_vectors(self):
        """Test rejecting zero-length pairs"""
        with self.assertRaises(ValidationError):
            PairedPoint([], [])

    def test_vector_round_trip_and_arithmetic(self):
        """Test flattening and vector-space arithmetic"""
        z = pp([1, 2], [3, 4])
        self.assertEqual(PairedPoint.from_vector(z.as_vector()), z)
        self.assertEqual(2 * z - z, z)
        self.assertEqual((z + (-z)), PairedPoint.zeros(2))

    def test_is_immutable(self):
        """Test that coordinates are read-only"""
        z = pp([1.0], [2.0])
        with self.assertRaises(ValueError):
            z.x[0] = 5.0


class ExtendedRealTests(SimpleTestCase):
    def test_infinite_operand_absorbs_finite(self):
        """Test that an infinite summand wins over a finite one"""
        self.assertTrue((PLUS_INF + 3.0).is_plus_inf)
        self.assertTrue((MINUS_INF + 3.0).is_minus_inf)
        self.assertTrue((5.0 - PLUS_INF).is_minus_inf)

    def test_opposite_infinities_are_indeterminate(self):
        """Test that (+inf) + (-inf) raises"""
        with self.assertRaises(IndeterminateFormError):
            PLUS_INF + MINUS_INF
        with self.assertRaises(IndeterminateFormError):
            PLUS_INF - PLUS_INF

    def test_zero_times_infinity_is_zero(self):
        """Test scaling infinities"""
        self.assertEqual(0.0 * PLUS_INF, ExtendedReal.finite(0.0))
        self.assertTrue((2.0 * PLUS_INF).is_plus_inf)
        self.assertTrue((-2.0 * PLUS_INF).is_minus_inf)

    def test_ordering_places_infinities_beyond_finite_values(self):
        """Test ordering and the empty min/max"""
        self.assertLess(MINUS_INF, ExtendedReal.finite(-1e300))
        self.assertGreater(PLUS_INF, ExtendedReal.finite(1e300))
        self.assertTrue(PLUS_INF > 1e308)
        self.assertEqual(extended_max([1.0, PLUS_INF, 2.0]), PLUS_INF)
        self.assertEqual(extended_min([]), PLUS_INF)
        self.assertEqual(extended_max([]), MINUS_INF)

    def test_nan_is_rejected(self):
        """Test that NaN is not an extended real"""
        with self.assertRaises(ValidationError):
            ExtendedReal.from_float(float('nan'))

    def test_string_tokens(self):
        """Test the inf/-inf text tokens"""
        self.assertEqual(str(PLUS_INF), 'inf')
        self.assertEqual(str(MINUS_INF), '-inf')
        self.assertEqual(str(ExtendedReal.finite(0.5)), '0.5')

    def test_hash_agrees_with_float_equality(self):
        """Test that values equal to a float share its hash"""
        self.assertEqual(len({ExtendedReal.finite(1.0), 1.0}), 1)
        self.assertEqual(len({PLUS_INF, math.inf}), 1)
        self.assertEqual(hash(ExtendedReal.finite(2.0)), hash(2))

    @given(coordinates)
    def test_hash_matches_float_hash(self, value):
        """Test hashing finite values like their float payload"""
        self.assertEqual(hash(ExtendedReal.finite(value)), hash(value))


class CouplingTests(SimpleTestCase):
    def test_coupling_examples(self):
        """Test c(x, x*) = <x, x*> on small pairs"""
        self.assertEqual(coupling(pp(2, 3)), 6.0)
        self.assertEqual(coupling(pp(0, 7)), 0.0)
        self.assertEqual(coupling(pp([1, 2], [3, 4])), 11.0)

    def test_pair_dot_examples(self):
        """Test the symmetric pairing on small pairs"""
        self.assertEqual(pair_dot(pp(1, 0), pp(0, 1)), 1.0)
        self.assertEqual(pair_dot(pp(1, 2), pp(3, 4)), 10.0)

    def test_pair_dot_rejects_mixed_dimensions(self):
        """Test the dimension check of pair_dot"""
        with self.assertRaises(DimensionMismatchError):
            pair_dot(pp(1, 2), pp([1, 1], [2, 2]))

    @given(paired_point_tuples(2))
    def test_expansion_identity(self, points):
        """Test c(z+p) = c(z) + c(p) + z.p"""
        z, p = points
        lhs = coupling(z + p)
        rhs = coupling(z) + coupling(p) + pair_dot(z, p)
        self.assertAlmostEqual(lhs, rhs, delta=TOL_EXACT)
        self.assertAlmostEqual(pair_dot(z, z), 2 * coupling(z), delta=TOL_EXACT)

    @given(paired_point_tuples(2), weights)
    def test_convex_combination_identity(self, points, t):
        """Test c(tz+(1-t)w) = t c(z) + (1-t) c(w) - t(1-t) c(z-w)"""
        z, w = points
        lhs = coupling(t * z + (1 - t) * w)
        rhs = t * coupling(z) + (1 - t) * coupling(w) - t * (1 - t) * coupling(z - w)
        self.assertAlmostEqual(lhs, rhs, delta=TOL_EXACT)

    @given(paired_point_tuples(3), coordinates, coordinates)
    def test_pair_dot_is_bilinear_and_symmetric(self, points, a, b):
        """Test bilinearity and symmetry of the pairing"""
        z, w, v = points
        self.assertAlmostEqual(pair_dot(a * z + b * w, v),
                               a * pair_dot(z, v) + b * pair_dot(w, v), delta=TOL_EXACT)
        self.assertAlmostEqual(pair_dot(z, w), pair_dot(w, z), delta=TOL_EXACT)


class WeightedNormTests(SimpleTestCase):
    def test_examples(self):
        """Test the delta-weighted pair norm"""
        self.assertAlmostEqual(weighted_norm(pp(3, 4)), 5.0, delta=TOL_EXACT)
        self.assertAlmostEqual(weighted_norm(pp(1, 0), WeightedNorm(4.0)), 2.0, delta=TOL_EXACT)
        self.assertAlmostEqual(weighted_norm(pp(0, 2), WeightedNorm(4.0)), 1.0, delta=TOL_EXACT)

    def test_delta_must_be_positive(self):
        """Test rejecting delta <= 0"""
        with self.assertRaises(ValidationError):
            WeightedNorm(0.0)

    @given(paired_point_tuples(1, max_dimension=3), st.floats(min_value=0.01, max_value=100.0))
    def test_coordinate_scale_matches_norm(self, points, delta):
        """Test that coordinate scaling reproduces the weighted norm"""
        (z,) = points
        norm = WeightedNorm(delta)
        scaled = norm.coordinate_scale(z.dimension) * z.as_vector()
        self.assertAlmostEqual(float(np.linalg.norm(scaled)), weighted_norm(z, norm),
                               delta=TOL_EXACT * max(1.0, weighted_norm(z, norm)))


class TolerancePolicyTests(SimpleTestCase):
    def test_defaults(self):
        """Test the default tolerances"""
        policy = TolerancePolicy()
        self.assertEqual(policy.tol_exact, 1e-9)
        self.assertLessEqual(policy.tol_exact, policy.tol_slack)

    def test_rejects_non_positive_values(self):
        """Test rejecting a zero tolerance"""
        with self.assertRaises(ValidationError):
            TolerancePolicy(tol_iter=0.0)

    @override_settings(FITZLAB={'TOL_EXACT': 1e-10, 'TOL_ITER': 1e-6, 'TOL_SLACK': 1e-7, 'BISECT_WIDTH': 1e-11})
    def test_reads_settings_and_applies_overrides(self):
        """Test reading FITZLAB settings with explicit overrides"""
        policy = TolerancePolicy.from_settings(tol_slack=None, tol_iter=1e-5)
        self.assertEqual(policy.tol_exact, 1e-10)
        self.assertEqual(policy.tol_slack, 1e-7)
        self.assertEqual(policy.tol_iter, 1e-5)
