import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from core.exceptions import NonConvergenceError, PreconditionError
from core.models import TolerancePolicy, WeightedNorm
from core.strategies import seeds, vectors

from .models import HullGenerators
from .utils import lemma_argmin_sigma_check, membership, project, separating_direction, support_function

POLICY = TolerancePolicy()
TOL_ITER = POLICY.tol_iter


@st.composite
def hulls(draw, max_dimension=4):
    """Generators in general position: point and ray counts are drawn, coordinates come from a seeded normal"""
    m = draw(st.integers(min_value=2, max_value=max_dimension))
    rng = np.random.default_rng(draw(seeds))
    points = rng.normal(size=(draw(st.integers(min_value=1, max_value=6)), m))
    rays = rng.normal(size=(draw(st.integers(min_value=0, max_value=2)), m))
    return HullGenerators(points, rays)


@st.composite
def hulls_with_queries(draw):
    hull = draw(hulls())
    q = draw(vectors(hull.dimension, st.floats(min_value=-8.0, max_value=8.0)))
    return hull, q


class HullGeneratorsTests(SimpleTestCase):
    def test_requires_points(self):
        """Test that a hull needs at least one point"""
        with self.assertRaises(ValidationError):
            HullGenerators([], [[1.0, 0.0]])

    def test_rejects_zero_rays_and_mixed_lengths(self):
        """Test rejecting zero rays and rays of the wrong length"""
        with self.assertRaises(ValidationError):
            HullGenerators([[0.0, 0.0]], [[0.0, 0.0]])
        with self.assertRaises(ValidationError):
            HullGenerators([[0.0, 0.0]], [[1.0, 0.0, 0.0]])


class ProjectionTests(SimpleTestCase):
    def test_segment_projection(self):
        """Test that the origin projects to the midpoint of the segment between the unit vectors"""
        result = project(HullGenerators([[1.0, 0.0], [0.0, 1.0]]), [0.0, 0.0], policy=POLICY)
        self.assertAlmostEqual(result.distance, math.sqrt(2) / 2, delta=TOL_ITER)
        np.testing.assert_allclose(result.point, [0.5, 0.5], atol=TOL_ITER)
        np.testing.assert_allclose(result.point_weights, [0.5, 0.5], atol=TOL_ITER)

    def test_half_line_projection(self):
        """Test projecting onto a ray"""
        result = project(HullGenerators([[0.0, 0.0]], [[1.0, 0.0]]), [2.0, 1.0], policy=POLICY)
        np.testing.assert_allclose(result.point, [2.0, 0.0], atol=TOL_ITER)
        self.assertAlmostEqual(result.distance, 1.0, delta=TOL_ITER)
        self.assertLessEqual(result.kkt_residual, TOL_ITER)

    def test_interior_point_has_zero_distance(self):
        """Test that members have distance zero"""
        hull = HullGenerators([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        self.assertLessEqual(project(hull, [0.1, 0.2], policy=POLICY).distance, TOL_ITER)

    @settings(max_examples=60, deadline=None)
    @given(hulls_with_queries())
    def test_projection_satisfies_the_kkt_conditions(self, case):
        """Test feasible weights and the variational inequality at the projection"""
        hull, q = case
        result = project(hull, q, policy=POLICY)
        scale = max(1.0, float(np.linalg.norm(q)), float(np.abs(hull.points).max()))
        np.testing.assert_allclose(hull.combine(result.point_weights, result.ray_weights), result.point,
                                   atol=TOL_ITER * scale)
        self.assertAlmostEqual(float(result.point_weights.sum()), 1.0, delta=TOL_ITER)
        self.assertGreaterEqual(float(result.point_weights.min()), -TOL_ITER)
        if result.ray_weights.size:
            self.assertGreaterEqual(float(result.ray_weights.min()), -TOL_ITER)

        # <q - P(q), g - P(q)> <= 0 for points and <q - P(q), r> <= 0 for rays
        residual = q - result.point
        tolerance = 1e-6 * scale ** 2
        for point in hull.points:
            self.assertLessEqual(float(residual @ (point - result.point)), tolerance)
        for ray in hull.rays:
            self.assertLessEqual(float(residual @ ray), tolerance)

    @settings(max_examples=40, deadline=None)
    @given(hulls_with_queries(), seeds)
    def test_projection_beats_sampled_hull_points(self, case, seed):
        """Test that no sampled hull point is closer than the projection"""
        hull, q = case
        rng = np.random.default_rng(seed)
        distance = project(hull, q, policy=POLICY).distance
        for _ in range(50):
            self.assertLessEqual(distance, float(np.linalg.norm(q - hull.sample(rng))) + TOL_ITER)

    @settings(max_examples=40, deadline=None)
    @given(hulls_with_queries(), st.permutations(range(6)))
    def test_distance_ignores_duplication_and_order(self, case, order):
        """Test that reordering and repeating points keeps the distance"""
        hull, q = case
        points = hull.points[[i for i in order if i < hull.points.shape[0]]]
        base = project(hull, q, policy=POLICY).distance
        shuffled = project(HullGenerators(np.vstack([points, points[:2]]), hull.rays), q, policy=POLICY).distance
        self.assertAlmostEqual(base, shuffled, delta=TOL_ITER * max(1.0, base))

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.floats(min_value=0.05, max_value=20.0))
    def test_weighted_norm_equals_rescaled_problem(self, seed, delta):
        """Test that the delta-norm projection is the Euclidean one after rescaling"""
        rng = np.random.default_rng(seed)
        points = rng.normal(size=(4, 2))
        rays = rng.normal(size=(1, 2))
        q = rng.normal(size=2) * 3
        norm = WeightedNorm(delta)
        scale = norm.coordinate_scale(1)
        weighted = project(HullGenerators(points, rays), q, norm, POLICY).distance
        rescaled = project(HullGenerators(points * scale, rays * scale), q * scale, policy=POLICY).distance
        self.assertAlmostEqual(weighted, rescaled, delta=TOL_ITER * max(1.0, rescaled))

    def test_primal_distance_shrinks_with_delta(self):
        """Test that a smaller delta discounts the primal coordinates"""
        hull = HullGenerators([[0.0, 0.0], [0.0, 1.0]], [[0.0, 1.0]])
        q = [2.0, -1.0]
        distances = [project(hull, q, WeightedNorm(delta), POLICY).distance for delta in (1.0, 0.1, 0.01)]
        primal = [math.sqrt(delta) * abs(2.0 - project(hull, q, WeightedNorm(delta), POLICY).point[0])
                  for delta in (1.0, 0.1, 0.01)]
        self.assertTrue(all(a >= b - TOL_ITER for a, b in zip(primal, primal[1:])))
        self.assertTrue(all(d >= 0 for d in distances))

    def test_iteration_cap_raises_non_convergence(self):
        """Test that hitting the iteration cap raises"""
        rng = np.random.default_rng(34)
        hull = HullGenerators(rng.normal(size=(30, 3)))
        with self.assertRaises(NonConvergenceError):
            project(hull, [0.0, 0.0, 0.0], policy=POLICY, max_iter=1)


class MembershipTests(SimpleTestCase):
    def setUp(self):
        """Triangle around the segment [-1, 1] x {0}"""
        self.hull = HullGenerators([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    def test_examples(self):
        """Test interior, exterior and vertex points"""
        self.assertTrue(membership(self.hull, [0.0, 0.5], policy=POLICY))
        self.assertFalse(membership(self.hull, [0.0, 2.0], policy=POLICY))
        self.assertTrue(membership(self.hull, [1.0, 0.0], policy=POLICY))


class SeparatingDirectionTests(SimpleTestCase):
    def test_single_point(self):
        """Test separating the origin from a point"""
        hull = HullGenerators([[1.0, 1.0]])
        p = separating_direction(hull, [0.0, 0.0], policy=POLICY)
        np.testing.assert_allclose(p / np.linalg.norm(p), -np.ones(2) / math.sqrt(2), atol=1e-9)
        self.assertLess(float(support_function(hull, p, POLICY)), -POLICY.tol_exact)

    def test_segment_on_axis(self):
        """Test separating the origin from a segment on the axis"""
        hull = HullGenerators([[1.0, 0.0], [2.0, 0.0]])
        p = separating_direction(hull, [0.0, 0.0], policy=POLICY)
        np.testing.assert_allclose(p, [-1.0, 0.0], atol=1e-9)
        self.assertAlmostEqual(float(support_function(hull, p, POLICY)), -1.0, delta=1e-9)

    def test_member_raises(self):
        """Test that members cannot be separated"""
        with self.assertRaises(PreconditionError):
            separating_direction(HullGenerators([[-1.0], [1.0]]), [0.0], policy=POLICY)

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_rays_stay_non_positive(self, seed):
        """Test that the separating direction is non-positive on every ray"""
        rng = np.random.default_rng(seed)
        hull = HullGenerators(rng.normal(size=(3, 3)) + 4.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        q = np.zeros(3)
        if membership(hull, q, policy=POLICY):
            return
        p = separating_direction(hull, q, policy=POLICY)
        self.assertLessEqual(float(np.max(hull.rays @ p)), POLICY.tol_exact)
        self.assertLess(float(np.max(hull.points @ p)), -POLICY.tol_exact)


class ArgminSigmaLemmaTests(SimpleTestCase):
    def test_examples(self):
        """Test the support sign against membership of the origin"""
        self.assertTrue(lemma_argmin_sigma_check([[-1, 0], [1, 0], [0, -1], [0, 1]], policy=POLICY))
        self.assertTrue(lemma_argmin_sigma_check([[1, 1], [2, 1]], policy=POLICY))
        self.assertTrue(lemma_argmin_sigma_check([[0, 0]], policy=POLICY))

    @settings(max_examples=60, deadline=None)
    @given(hulls(), st.floats(min_value=0.0, max_value=3.0), seeds)
    def test_random_sets_agree(self, hull, shift, seed):
        """Test that the support sign and membership agree for shifted point sets"""
        rng = np.random.default_rng(seed)
        points = hull.points + shift * rng.normal(size=hull.dimension)
        self.assertTrue(lemma_argmin_sigma_check(points, policy=POLICY, rng=rng))
