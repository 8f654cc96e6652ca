import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.models import PairedPoint, TolerancePolicy
from core.strategies import paired_points, seeds, vectors
from core.utils import coupling, pair_dot

from .models import (
    CubicOperator,
    LinearMonotoneOperator,
    LinePiece,
    PointPiece,
    PolygonalOperator,
    RayPiece,
    SegmentPiece,
)
from .utils import (
    affine_hull_basis,
    domain_hull,
    graph_hull,
    is_monotone,
    piece_inf_coupling,
    piece_sup_affine_quadratic,
    range_hull,
)

POLICY = TolerancePolicy()


def pp(x, xstar):
    return PairedPoint(np.atleast_1d(x), np.atleast_1d(xstar))


def identity_line():
    return LinePiece(pp(0, 0), pp(1, 1))


def cross_operator():
    return PolygonalOperator((LinePiece(pp(0, 0), pp(1, 0)), LinePiece(pp(0, 0), pp(0, 1))))


QUARTERS = st.integers(min_value=-20, max_value=20).map(lambda k: k / 4.0)


@st.composite
def pieces(draw, n=None):
    """One graph piece with quarter-unit coordinates"""
    n = n or draw(st.integers(min_value=1, max_value=3))
    kind = draw(st.sampled_from(['point', 'segment', 'ray', 'line']))
    a = draw(st.builds(PairedPoint, vectors(n, QUARTERS), vectors(n, QUARTERS)))
    b = draw(st.builds(PairedPoint, vectors(n, QUARTERS), vectors(n, QUARTERS)))
    if kind == 'point':
        return PointPiece(a)
    assume(not (b - a if kind == 'segment' else b).is_zero())
    if kind == 'segment':
        return SegmentPiece(a, b)
    if kind == 'ray':
        return RayPiece(a, b)
    return LinePiece(a, b)


class PieceTests(SimpleTestCase):
    def test_segment_with_equal_endpoints_is_rejected(self):
        """Test that degenerate segments must be point pieces"""
        with self.assertRaises(ValidationError):
            SegmentPiece(pp(1, 1), pp(1, 1))

    def test_zero_direction_is_rejected(self):
        """Test rejecting rays and lines without a direction"""
        with self.assertRaises(ValidationError):
            RayPiece(pp(0, 0), pp(0, 0))
        with self.assertRaises(ValidationError):
            LinePiece(pp(0, 0), pp(0, 0))

    def test_operator_rejects_mixed_dimensions(self):
        """Test that all pieces share one dimension"""
        with self.assertRaises(ValidationError):
            PolygonalOperator((PointPiece(pp(0, 0)), PointPiece(pp([0, 0], [0, 0]))))

    def test_operator_rejects_empty_piece_list(self):
        """Test that an operator needs a piece"""
        with self.assertRaises(ValidationError):
            PolygonalOperator(())


class PieceOptimizationTests(SimpleTestCase):
    def test_sup_examples(self):
        """Test the per-piece sup of <z, alpha> - c(alpha)"""
        self.assertEqual(piece_sup_affine_quadratic(PointPiece(pp(0, 0)), pp(3, -2), POLICY), 0.0)
        self.assertAlmostEqual(float(piece_sup_affine_quadratic(identity_line(), pp(1, 1), POLICY)), 1.0,
                               delta=1e-12)
        self.assertTrue(piece_sup_affine_quadratic(RayPiece(pp(0, 0), pp(1, 0)), pp(0, 1), POLICY).is_plus_inf)

    def test_inf_examples(self):
        """Test the per-piece inf of c(z - alpha)"""
        self.assertEqual(piece_inf_coupling(PointPiece(pp(0, 0)), pp(1, 1), POLICY), 1.0)
        self.assertAlmostEqual(float(piece_inf_coupling(identity_line(), pp(1, -1), POLICY)), -1.0, delta=1e-12)
        # c((-t, 1)) = -t decreases without bound on t >= 0
        self.assertTrue(piece_inf_coupling(RayPiece(pp(0, 0), pp(1, 0)), pp(0, 1), POLICY).is_minus_inf)
        self.assertEqual(piece_inf_coupling(RayPiece(pp(0, 0), pp(1, 0)), pp(0, -1), POLICY), 0.0)

    def test_identity_line_sup_matches_dense_grid(self):
        """Test that sup of 2t - t^2 agrees with a parameter grid search"""
        grid = np.linspace(-5, 5, 100001)
        oracle = float(np.max(2 * grid - grid ** 2))
        value = float(piece_sup_affine_quadratic(identity_line(), pp(1, 1), POLICY))
        self.assertAlmostEqual(value, oracle, delta=1e-8)

    @given(st.data())
    def test_sup_and_inf_bound_every_parameter(self, data):
        """Test that the closed forms bound the objective at any parameter of the piece"""
        piece = data.draw(pieces())
        z = data.draw(paired_points(piece.dimension))
        lower, upper = piece.parameter_range
        t = data.draw(st.floats(min_value=max(lower, -20.0), max_value=min(upper, 20.0)))
        alpha = piece.at(t)

        objective = pair_dot(z, alpha) - coupling(alpha)
        sup = piece_sup_affine_quadratic(piece, z, POLICY)
        self.assertGreaterEqual(float(sup) + 1e-9 * max(1.0, abs(objective)), objective)
        value = coupling(z - alpha)
        inf = piece_inf_coupling(piece, z, POLICY)
        self.assertLessEqual(float(inf) - 1e-9 * max(1.0, abs(value)), value)


class MonotonicityTests(SimpleTestCase):
    def test_two_points_examples(self):
        """Test monotone and non-monotone point pairs with a witness"""
        self.assertTrue(is_monotone(PolygonalOperator.from_points([pp(0, 0), pp(1, 1)]), POLICY))
        result = is_monotone(PolygonalOperator.from_points([pp(0, 1), pp(1, 0)]), POLICY)
        self.assertFalse(result)
        first, second = result.witness
        self.assertAlmostEqual(coupling(first - second), -1.0, delta=1e-12)

    def test_cross_operator_is_not_monotone(self):
        """Test that the union of the axes is not monotone"""
        result = is_monotone(cross_operator(), POLICY)
        self.assertFalse(result.is_monotone)
        first, second = result.witness
        self.assertLess(coupling(first - second), -POLICY.tol_exact)

    def test_identity_line_and_staircase_are_monotone(self):
        """Test the identity line and a subdifferential staircase"""
        staircase = PolygonalOperator((
            RayPiece(pp(0, 0), pp(-1, 0)),
            SegmentPiece(pp(0, 0), pp(0, 1)),
            SegmentPiece(pp(0, 1), pp(2, 1)),
            RayPiece(pp(2, 1), pp(0, 1)),
        ))
        self.assertTrue(is_monotone(PolygonalOperator((identity_line(),)), POLICY))
        self.assertTrue(is_monotone(staircase, POLICY))

    def test_decreasing_line_is_not_monotone(self):
        """Test that a decreasing line has minimum -inf"""
        result = is_monotone(PolygonalOperator((LinePiece(pp(0, 0), pp(1, -1)),)), POLICY)
        self.assertFalse(result)
        self.assertTrue(result.minimum.is_minus_inf)

    @given(st.lists(pieces(n=1), min_size=1, max_size=4))
    def test_reordering_preserves_the_answer(self, chosen):
        """Test that piece order does not change the verdict"""
        forward = is_monotone(PolygonalOperator(tuple(chosen)), POLICY).is_monotone
        backward = is_monotone(PolygonalOperator(tuple(reversed(chosen))), POLICY).is_monotone
        self.assertEqual(forward, backward)

    def test_splitting_a_segment_preserves_the_answer(self):
        """Test that splitting a segment does not change the verdict"""
        segment = SegmentPiece(pp(0, 0), pp(1, 2))
        whole = is_monotone(PolygonalOperator((segment, PointPiece(pp(3, 3)))), POLICY).is_monotone
        split = is_monotone(PolygonalOperator(segment.split(0.3) + (PointPiece(pp(3, 3)),)), POLICY).is_monotone
        self.assertEqual(whole, split)


class LinearOperatorTests(SimpleTestCase):
    def test_rejects_non_psd_symmetric_part(self):
        """Test that a negative symmetric part is reported with its eigenvalue"""
        with self.assertRaises(ValidationError) as ctx:
            LinearMonotoneOperator([[-1.0]], [0.0])
        self.assertIn('-1', str(ctx.exception))

    def test_skew_part_is_allowed(self):
        """Test that a rotation is monotone"""
        operator = LinearMonotoneOperator([[0.0, 1.0], [-1.0, 0.0]], [0.0, 0.0])
        self.assertEqual(operator.min_eigenvalue, 0.0)
        self.assertTrue(is_monotone(operator))

    @given(seeds)
    def test_cached_decomposition_reproduces_symmetric_part(self, seed):
        """Test the cached eigendecomposition"""
        rng = np.random.default_rng(seed)
        root = rng.normal(size=(3, 3))
        operator = LinearMonotoneOperator(root @ root.T + (root - root.T), rng.normal(size=3))
        self.assertLessEqual(operator.reconstruction_error(), 1e-9 * max(1.0, float(np.abs(root @ root.T).max())))

    @given(arrays(float, (4, 4), elements=st.integers(min_value=-3, max_value=3)),
           vectors(4), vectors(4))
    def test_graph_pairs_of_a_psd_map_are_monotone(self, root, a, b):
        """Test c(alpha - beta) >= 0 for graph points of x -> R R' x"""
        operator = LinearMonotoneOperator(root @ root.T, np.zeros(4))
        value = coupling(operator.graph_point(a) - operator.graph_point(b))
        self.assertGreaterEqual(value, -1e-9 * max(1.0, float(np.abs(root).max()) ** 2 * 100))


class HullExtractionTests(SimpleTestCase):
    def test_cross_operator_domain_is_the_real_line(self):
        """Test that the domain hull of the axes is a line"""
        hull = domain_hull(cross_operator())
        np.testing.assert_allclose(hull.points, [[0.0], [0.0]])
        self.assertEqual(sorted(hull.rays.ravel().tolist()), [-1.0, 1.0])

    def test_point_hulls(self):
        """Test domain and range hulls of point operators"""
        hull = domain_hull(PolygonalOperator.from_points([pp(0, 0), pp(1, 1)]))
        self.assertEqual(sorted(hull.points.ravel().tolist()), [0.0, 1.0])
        self.assertEqual(hull.rays.shape[0], 0)
        self.assertEqual(range_hull(PolygonalOperator.from_points([pp(2, 5)])).points.tolist(), [[5.0]])
        self.assertEqual(domain_hull(PolygonalOperator.from_points([pp(2, 5)])).points.tolist(), [[2.0]])

    def test_graph_hull_of_linear_operator_spans_the_graph(self):
        """Test the graph hull of an affine map"""
        operator = LinearMonotoneOperator([[2.0, 1.0], [-1.0, 1.0]], [1.0, 0.0])
        hull = graph_hull(operator)
        self.assertEqual(hull.dimension, 4)
        self.assertEqual(hull.rays.shape[0], 4)

    def test_cubic_hulls_cover_everything(self):
        """Test that the cubic's hulls are whole spaces"""
        self.assertEqual(graph_hull(CubicOperator()).rays.shape, (4, 2))
        self.assertEqual(domain_hull(CubicOperator()).rays.shape, (2, 1))


class AffineHullTests(SimpleTestCase):
    def test_examples(self):
        """Test affine hull bases of small point sets"""
        hull = affine_hull_basis([[0, 0], [1, 0]], POLICY)
        np.testing.assert_allclose(hull.base, [0, 0])
        np.testing.assert_allclose(np.abs(hull.basis), [[1, 0]])
        self.assertEqual(affine_hull_basis([[3, 4]], POLICY).rank, 0)
        self.assertEqual(affine_hull_basis([[0, 0], [1, 1], [2, 2]], POLICY).rank, 1)

    @given(st.integers(min_value=1, max_value=4).flatmap(
        lambda k: arrays(float, (k, 4), elements=st.integers(min_value=-3, max_value=3))))
    def test_rank_matches_matrix_rank(self, points):
        """Test the rank and that every generator lies in the hull"""
        hull = affine_hull_basis(points, POLICY)
        expected = np.linalg.matrix_rank(points[1:] - points[0]) if points.shape[0] > 1 else 0
        self.assertEqual(hull.rank, expected)
        for point in points:
            self.assertTrue(hull.contains(point, 1e-7))

    def test_membership_residual(self):
        """Test containment and the distance residual"""
        hull = affine_hull_basis([[0, 0], [1, 0]], POLICY)
        self.assertTrue(hull.contains([5.0, 0.0], 1e-7))
        self.assertAlmostEqual(hull.residual([5.0, 2.0]), 2.0, delta=1e-12)
        self.assertFalse(math.isnan(hull.residual([1.0, 1.0])))
