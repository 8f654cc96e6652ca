import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from core.exceptions import DimensionMismatchError, PreconditionError, R1ViolationError
from core.models import MINUS_INF, PLUS_INF, ExtendedReal, PairedPoint, TolerancePolicy, WeightedNorm
from core.strategies import paired_points, seeds, steps, weights
from core.utils import coupling
from opmodel.models import CubicOperator, LinearMonotoneOperator, LinePiece, PointPiece, PolygonalOperator, SegmentPiece
from opmodel.utils import graph_hull

from .constructions import boundary_point, negative_coupling_witness, segment_probe
from .estimates import (
    NULL_COUPLING,
    POSITIVE_COUPLING,
    affine_shift_witness,
    default_m3_candidates,
    estimate_convexity,
    estimate_i2,
    estimate_i3,
    estimate_m2,
    estimate_m3,
    estimate_m4,
    estimate_m7,
    estimate_main,
    m9_inclusion,
    r1_implications,
    tplus_domain_inclusion,
)
from .models import SamplerConfig, SlackReport
from .utils import (
    fitzpatrick,
    gap,
    monotonically_related_gap,
    ni_falsify,
    support_shifted,
    tplus_contains,
)

POLICY = TolerancePolicy()
UNIT = st.floats(min_value=-2.0, max_value=2.0)


def pp(x, xstar):
    return PairedPoint(np.atleast_1d(x), np.atleast_1d(xstar))


def identity_line():
    return PolygonalOperator((LinePiece(pp(0, 0), pp(1, 1)),))


def cross_operator():
    return PolygonalOperator((LinePiece(pp(0, 0), pp(1, 0)), LinePiece(pp(0, 0), pp(0, 1))))


def origin():
    return PolygonalOperator.from_points([pp(0, 0)])


def x_axis():
    """Graph of the zero map on R, so dom phi is x* = 0"""
    return LinearMonotoneOperator([[0.0]], [0.0])


def bounded_operator(rng, n, pieces=3):
    """Points and segments only, so phi is finite everywhere"""
    chosen = []
    for _ in range(pieces):
        a = pp(rng.normal(size=n), rng.normal(size=n))
        if rng.uniform() < 0.5:
            chosen.append(PointPiece(a))
        else:
            chosen.append(SegmentPiece(a, pp(rng.normal(size=n), rng.normal(size=n))))
    return PolygonalOperator(tuple(chosen))


@st.composite
def bounded_operators(draw, n=None):
    """A seeded bounded operator with a drawn dimension and piece count"""
    n = n or draw(st.integers(min_value=1, max_value=3))
    rng = np.random.default_rng(draw(seeds))
    return bounded_operator(rng, n, pieces=draw(st.integers(min_value=1, max_value=3)))


@st.composite
def operators_with_points(draw, count=1, lines=True):
    """A bounded operator or a single line together with `count` points of its dimension"""
    n = draw(st.integers(min_value=1, max_value=2))
    if lines and draw(st.booleans()):
        rng = np.random.default_rng(draw(seeds))
        operator = PolygonalOperator((
            LinePiece(pp(rng.normal(size=n), rng.normal(size=n)), pp(rng.normal(size=n), rng.normal(size=n))),
        ))
    else:
        operator = draw(bounded_operators(n=n))
    return (operator, *(draw(paired_points(n)) for _ in range(count)))


class SlackReportTests(SimpleTestCase):
    def test_infinite_sides(self):
        """Test that infinite sides give infinite slacks with the right sign"""
        self.assertTrue(SlackReport.evaluate(5.0, PLUS_INF, POLICY).slack.is_plus_inf)
        self.assertTrue(SlackReport.evaluate(MINUS_INF, 0.0, POLICY).passed)
        self.assertTrue(SlackReport.evaluate(MINUS_INF, PLUS_INF, POLICY).slack.is_plus_inf)
        report = SlackReport.evaluate(PLUS_INF, 3.0, POLICY)
        self.assertFalse(report.passed)
        self.assertTrue(report.slack.is_minus_inf)

    def test_tolerance(self):
        """Test that a slack above -tol_slack still passes"""
        self.assertTrue(SlackReport.evaluate(1.0, 1.0 - 0.5 * POLICY.tol_slack, POLICY).passed)
        self.assertFalse(SlackReport.evaluate(1.0, 1.0 - 2 * POLICY.tol_slack, POLICY).passed)


class FitzpatrickTests(SimpleTestCase):
    def test_cross_operator_vanishes_at_the_origin(self):
        """Test phi of the cross operator at the origin"""
        self.assertEqual(fitzpatrick(cross_operator(), pp(0, 0), POLICY), 0.0)

    @given(paired_points(1))
    def test_cross_operator_is_infinite_off_the_origin(self, z):
        """Test that phi of the cross operator is +inf away from the origin"""
        assume(not z.is_zero(0.0))
        self.assertTrue(fitzpatrick(cross_operator(), z, POLICY).is_plus_inf)

    def test_identity_line_closed_form_on_grid(self):
        """Test phi of the identity line against (x + x*)^2 / 4"""
        for x in np.linspace(-3, 3, 31):
            for xstar in np.linspace(-3, 3, 31):
                value = fitzpatrick(identity_line(), pp(x, xstar), POLICY)
                self.assertAlmostEqual(float(value), (x + xstar) ** 2 / 4, delta=1e-9)

    def test_point_and_cubic_examples(self):
        """Test phi of a single point and of the cubic at the origin"""
        self.assertEqual(fitzpatrick(origin(), pp(4, -7), POLICY), 0.0)
        self.assertAlmostEqual(float(fitzpatrick(CubicOperator(), pp(0, 0), POLICY)), 0.0, delta=1e-12)

    @settings(max_examples=10, deadline=None)
    @given(UNIT, UNIT)
    def test_cubic_matches_dense_grid(self, x, xstar):
        """Test phi of the cubic against a dense grid maximum"""
        grid = np.linspace(-4, 4, 400001)
        oracle = float(np.max((x - grid) * grid ** 3 + grid * xstar))
        self.assertAlmostEqual(float(fitzpatrick(CubicOperator(), pp(x, xstar), POLICY)), oracle, delta=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_linear_spd_gap_closed_form(self, seed):
        """Test the gap of an SPD map against (Ax - x*) A^-1 (Ax - x*) / 4"""
        rng = np.random.default_rng(seed)
        root = rng.normal(size=(3, 3))
        A = root @ root.T + np.eye(3)
        operator = LinearMonotoneOperator(A, np.zeros(3))
        x, xstar = rng.normal(size=3), rng.normal(size=3)
        residual = A @ x - xstar
        expected = 0.25 * residual @ np.linalg.solve(A, residual)
        self.assertAlmostEqual(float(gap(operator, PairedPoint(x, xstar), POLICY)), expected, delta=1e-9)

    def test_linear_operator_outside_range_is_infinite(self):
        """Test that phi of the zero map is +inf off x* = 0"""
        self.assertTrue(fitzpatrick(x_axis(), pp(0, 1), POLICY).is_plus_inf)
        self.assertEqual(fitzpatrick(x_axis(), pp(5, 0), POLICY), 0.0)

    def test_dimension_mismatch(self):
        """Test that a point of the wrong dimension is rejected"""
        with self.assertRaises(DimensionMismatchError):
            fitzpatrick(identity_line(), pp([0, 0], [0, 0]), POLICY)


class GapTests(SimpleTestCase):
    def test_examples(self):
        """Test the gap at hand-computed points"""
        self.assertAlmostEqual(float(gap(identity_line(), pp(1, -1), POLICY)), 1.0, delta=1e-12)
        self.assertEqual(gap(origin(), pp(1, 1), POLICY), -1.0)

    @settings(max_examples=200, deadline=None)
    @given(operators_with_points())
    def test_identity_with_monotonically_related_gap(self, drawn):
        """Test phi + inf c(z - alpha) = c(z), with phi = +inf exactly when the inf is -inf"""
        operator, z = drawn
        phi = fitzpatrick(operator, z, POLICY)
        related = monotonically_related_gap(operator, z, POLICY)
        self.assertEqual(phi.is_plus_inf, related.is_minus_inf)
        if phi.is_finite:
            self.assertAlmostEqual(float(phi) + float(related), coupling(z), delta=1e-8 * max(1.0, abs(coupling(z))))

    @given(paired_points(2))
    def test_identity_for_a_linear_operator(self, z):
        """Test the related-gap identity for a skew-perturbed linear map"""
        operator = LinearMonotoneOperator([[2.0, 1.0], [-1.0, 1.0]], [0.5, -0.5])
        total = fitzpatrick(operator, z, POLICY) + monotonically_related_gap(operator, z, POLICY)
        self.assertAlmostEqual(float(total), coupling(z), delta=1e-8 * max(1.0, abs(coupling(z))))

    @settings(deadline=None)
    @given(UNIT, UNIT)
    def test_identity_for_the_cubic(self, x, xstar):
        """Test the related-gap identity for the cubic"""
        w = pp(x, xstar)
        total = fitzpatrick(CubicOperator(), w, POLICY) + monotonically_related_gap(CubicOperator(), w, POLICY)
        self.assertAlmostEqual(float(total), coupling(w), delta=1e-8)

    @settings(deadline=None)
    @given(st.sampled_from(['identity', 'cross', 'linear']), paired_points(1))
    def test_gap_is_nonnegative_on_ni_operators(self, name, z):
        """Test that the gap of an NI operator never drops below zero"""
        operator = {
            'identity': identity_line(),
            'cross': cross_operator(),
            'linear': LinearMonotoneOperator([[1.0]], [0.5]),
        }[name]
        self.assertGreaterEqual(float(gap(operator, z, POLICY)), -POLICY.tol_slack * max(1.0, abs(coupling(z))))

    @settings(deadline=None)
    @given(UNIT, UNIT)
    def test_gap_of_the_cubic_is_nonnegative(self, x, xstar):
        """Test that the cubic, a maximal monotone graph, has a nonnegative gap"""
        self.assertGreaterEqual(float(gap(CubicOperator(), pp(x, xstar), POLICY)), -1e-7)

    @given(seeds)
    def test_monotone_graph_points_have_nonpositive_gap(self, seed):
        """Test that graph points of monotone operators sit on [phi <= c]"""
        staircase = PolygonalOperator((
            SegmentPiece(pp(-1, -1), pp(0, -1)),
            SegmentPiece(pp(0, -1), pp(0, 1)),
            SegmentPiece(pp(0, 1), pp(1, 1)),
        ))
        rng = np.random.default_rng(seed)
        self.assertLessEqual(float(gap(staircase, staircase.sample_graph_point(rng), POLICY)), POLICY.tol_slack)
        point = identity_line().sample_graph_point(rng)
        self.assertAlmostEqual(float(gap(identity_line(), point, POLICY)), 0.0, delta=POLICY.tol_slack)

    @settings(max_examples=100, deadline=None)
    @given(bounded_operators(n=2), paired_points(2), paired_points(2), weights)
    def test_phi_is_convex_along_segments(self, operator, z, w, t):
        """Test convexity of phi and the quadratic correction for the gap"""
        self.assertTrue(estimate_convexity(operator, z, w, t, POLICY).passed)
        self.assertTrue(estimate_i2(operator, z, w, t, POLICY).passed)

    def test_segment_bound_from_a_point_of_tplus(self):
        """Test the segment bound from a point of [phi <= c] and its precondition"""
        report = estimate_i3(origin(), pp(1, 1), pp(0, 0), 0.5, POLICY)
        self.assertAlmostEqual(float(report.lhs), -0.25, delta=1e-12)
        self.assertAlmostEqual(float(report.slack), 0.0, delta=1e-12)
        with self.assertRaises(PreconditionError):
            estimate_i3(origin(), pp(1, 1), pp(1, -1), 0.5, POLICY)


class SupportTests(SimpleTestCase):
    def test_examples(self):
        """Test the shifted support at hand-computed directions"""
        point = PolygonalOperator.from_points([pp(1, 2)])
        self.assertEqual(support_shifted(point, pp(0, 0), pp(3, 4), POLICY), 10.0)
        ray = PolygonalOperator((LinePiece(pp(0, 0), pp(1, 0)),))
        self.assertTrue(support_shifted(ray, pp(0, 0), pp(0, 1), POLICY).is_plus_inf)
        for s in (-2.0, 0.5, 3.0):
            value = support_shifted(identity_line(), pp(1, -1), pp(s, -s), POLICY)
            self.assertAlmostEqual(float(value), 2 * s, delta=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(bounded_operators(n=2), paired_points(2), paired_points(2), steps)
    def test_positive_homogeneity(self, operator, z, p, lam):
        """Test sigma(lam p) = lam sigma(p) for lam >= 0"""
        scaled = float(support_shifted(operator, z, lam * p, POLICY))
        self.assertAlmostEqual(scaled, lam * float(support_shifted(operator, z, p, POLICY)),
                               delta=1e-9 * max(1.0, abs(scaled)))

    def test_cubic_support_is_finite_only_at_zero(self):
        """Test that the cubic has a finite support only along p = 0"""
        self.assertEqual(support_shifted(CubicOperator(), pp(1, 1), pp(0, 0), POLICY), 0.0)
        self.assertTrue(support_shifted(CubicOperator(), pp(1, 1), pp(0, 1), POLICY).is_plus_inf)


class TPlusTests(SimpleTestCase):
    def test_examples(self):
        """Test the related gap and T+ membership at hand-computed points"""
        self.assertEqual(monotonically_related_gap(origin(), pp(1, 1), POLICY), 1.0)
        self.assertAlmostEqual(float(monotonically_related_gap(identity_line(), pp(1, -1), POLICY)), -1.0,
                               delta=1e-12)
        self.assertEqual(monotonically_related_gap(origin(), pp(1, -1), POLICY), -1.0)
        self.assertTrue(tplus_contains(origin(), pp(1, 1), POLICY))
        self.assertFalse(tplus_contains(origin(), pp(1, -1), POLICY))
        self.assertTrue(tplus_contains(identity_line(), pp(0, 0), POLICY))


class EstimateTests(SimpleTestCase):
    def setUp(self):
        """The tight instance on the identity line"""
        self.z = pp(1, -1)
        self.p = pp(-1, 1)

    def test_main_is_tight_on_identity_line(self):
        """Test that the universal estimate is an equality on the identity line"""
        report = estimate_main(identity_line(), self.z, self.p, 1.0, POLICY)
        self.assertAlmostEqual(float(report.lhs), 0.0, delta=1e-12)
        self.assertAlmostEqual(float(report.slack), 0.0, delta=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=1, max_value=3).flatmap(
        lambda n: st.tuples(paired_points(n), paired_points(n), paired_points(n))), steps)
    def test_main_is_an_equality_for_single_points(self, points, t):
        """Test that the universal estimate has zero slack on a single point"""
        alpha, z, p = points
        operator = PolygonalOperator.from_points([alpha])
        report = estimate_main(operator, z, p, t, POLICY)
        scale = max(1.0, abs(float(report.lhs)), abs(float(report.rhs)))
        self.assertAlmostEqual(float(report.slack), 0.0, delta=1e-9 * scale)

    def test_main_at_zero_step(self):
        """Test that a zero step gives zero slack"""
        report = estimate_main(identity_line(), self.z, pp(3, 1), 0.0, POLICY)
        self.assertAlmostEqual(float(report.slack), 0.0, delta=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(bounded_operators(n=2), paired_points(2), paired_points(2), steps)
    def test_main_holds_for_random_operators(self, operator, z, p, t):
        """Test the universal estimate on bounded operators"""
        self.assertTrue(estimate_main(operator, z, p, t, POLICY).passed)

    def test_main_rejects_negative_step(self):
        """Test that a negative step is a precondition error"""
        with self.assertRaises(PreconditionError):
            estimate_main(identity_line(), self.z, self.p, -1.0, POLICY)

    def test_m2_on_identity_line(self):
        """Test the quadratic NI bound on the identity line, tight at t = 1"""
        for t in (0.0, 0.5, 1.0, 2.0):
            report = estimate_m2(identity_line(), self.z, self.p, t, POLICY)
            self.assertTrue(report.passed)
        self.assertAlmostEqual(float(estimate_m2(identity_line(), self.z, self.p, 1.0, POLICY).slack), 0.0,
                               delta=1e-12)

    @given(paired_points(1), st.floats(min_value=0.0, max_value=5.0))
    def test_m2_on_cross_operator(self, p, t):
        """Test the quadratic NI bound at the origin of the cross operator"""
        self.assertTrue(estimate_m2(cross_operator(), pp(0, 0), p, t, POLICY).passed)

    def test_m3_examples(self):
        """Test the sup bound on the identity line and with no candidates"""
        report = estimate_m3(identity_line(), self.z, [self.p], POLICY)
        self.assertAlmostEqual(float(report.lhs), 1.0, delta=1e-9)
        self.assertAlmostEqual(float(report.slack), 0.0, delta=1e-9)
        empty = estimate_m3(identity_line(), self.z, [], POLICY)
        self.assertTrue(empty.lhs.is_minus_inf)
        self.assertTrue(empty.passed)

    def test_m3_on_cross_operator(self):
        """Test the sup bound at the origin of the cross operator"""
        rng = np.random.default_rng(52)
        candidates = default_m3_candidates(1, rng, 64)
        report = estimate_m3(cross_operator(), pp(0, 0), candidates, POLICY)
        self.assertTrue(report.passed)
        self.assertLessEqual(float(report.lhs), 0.0)

    def test_m3_passes_outside_dom_phi(self):
        """Test that the sup bound passes with infinite slack where the gap is +inf"""
        z = pp(0, 1)
        self.assertTrue(gap(x_axis(), z, POLICY).is_plus_inf)
        report = estimate_m3(x_axis(), z, [pp(1, 0), pp(1, -1)], POLICY)
        self.assertTrue(report.passed)
        self.assertTrue(report.slack.is_plus_inf)

    def test_m3_raises_on_a_null_coupling_direction_inside_dom_phi(self):
        """Test that sigma < 0 with c(p) = 0 inside dom phi is reported"""
        with self.assertRaises(R1ViolationError):
            estimate_m3(origin(), pp(1, 1), [pp(1, 0)], POLICY)

    def test_m4_examples(self):
        """Test the square-root bound on the identity line"""
        report = estimate_m4(identity_line(), self.z, self.p, POLICY)
        self.assertAlmostEqual(float(report.slack), 0.0, delta=1e-9)
        zero = estimate_m4(identity_line(), self.z, pp(0, 0), POLICY)
        self.assertAlmostEqual(float(zero.slack), 0.0, delta=1e-12)

    def test_m7_on_identity_line(self):
        """Test the distance bound on the identity line"""
        hull = graph_hull(identity_line())
        report = estimate_m7(identity_line(), self.z, hull, WeightedNorm(1.0), POLICY)
        self.assertAlmostEqual(float(report.lhs), 1.0, delta=1e-7)
        self.assertAlmostEqual(float(report.slack), 0.0, delta=1e-7)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.sampled_from([0.1, 1.0, 10.0]))
    def test_m7_weighted_holds_on_linear_operators(self, seed, delta):
        """Test the weighted distance bound on monotone linear maps"""
        rng = np.random.default_rng(seed)
        root = rng.normal(size=(2, 2))
        operator = LinearMonotoneOperator(root @ root.T + np.array([[0.0, 1.0], [-1.0, 0.0]]), rng.normal(size=2))
        hull = graph_hull(operator)
        z = pp(rng.normal(size=2), rng.normal(size=2))
        self.assertTrue(estimate_m7(operator, z, hull, WeightedNorm(delta), POLICY).passed)

    def test_r1_implications(self):
        """Test that the sign implications hold on the identity line"""
        self.assertIsNone(r1_implications(identity_line(), self.z, pp(1, 1), POLICY))
        self.assertIsNone(r1_implications(identity_line(), self.z, pp(2, -2), POLICY))
        self.assertIsNone(r1_implications(identity_line(), self.z, pp(0, 0), POLICY))

    def test_r1_detects_violations_on_a_non_ni_operator(self):
        """Test that a single point, which is not NI, violates the implications"""
        self.assertEqual(r1_implications(origin(), pp(0, 0), pp(1, 1), POLICY), POSITIVE_COUPLING)
        z, p = pp(1, 1), pp(1, 0)
        self.assertAlmostEqual(coupling(p), 0.0, delta=1e-15)
        self.assertAlmostEqual(float(support_shifted(origin(), z, p, POLICY)), -1.0, delta=1e-12)
        self.assertEqual(r1_implications(origin(), z, p, POLICY), NULL_COUPLING)

    def test_r1_only_binds_inside_dom_phi(self):
        """Test that outside dom phi the implications can fail even on an NI operator"""
        self.assertTrue(gap(x_axis(), pp(0, 1), POLICY).is_plus_inf)
        self.assertEqual(r1_implications(x_axis(), pp(0, 1), pp(1, 0), POLICY), NULL_COUPLING)
        self.assertIsNone(r1_implications(x_axis(), pp(0, 0), pp(1, 0), POLICY))


class InclusionTests(SimpleTestCase):
    def test_projection_search_reaches_phi_le_c(self):
        """Test that the separating walk reaches [phi <= c] from outside conv D(T)"""
        witness = m9_inclusion(origin(), pp(1, -1), 'x', POLICY)
        self.assertFalse(witness.in_hull)
        self.assertTrue(witness.holds)
        self.assertLessEqual(float(witness.gap_value), POLICY.tol_slack)
        self.assertEqual(witness.point.x.tolist(), [1.0])

    def test_projection_member(self):
        """Test that points of the identity line project into both hulls"""
        self.assertTrue(m9_inclusion(identity_line(), pp(5, -2), 'x', POLICY).in_hull)
        self.assertTrue(m9_inclusion(identity_line(), pp(5, -2), 'xstar', POLICY).in_hull)

    def test_affine_shift_lands_on_phi_eq_c(self):
        """Test that the affine shift lands on [phi = c] on both sides"""
        for side in ('x', 'xstar'):
            witness = affine_shift_witness(origin(), pp(1, -1), side, POLICY)
            self.assertFalse(witness.in_hull)
            self.assertAlmostEqual(witness.residual, 0.0, delta=POLICY.tol_iter)
            self.assertAlmostEqual(witness.gamma, 1.0, delta=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_affine_shift_on_random_segments(self, seed):
        """Test the affine shift residual on a random segment in R^3"""
        rng = np.random.default_rng(seed)
        a = pp(rng.normal(size=3), rng.normal(size=3))
        operator = PolygonalOperator((SegmentPiece(a, a + pp(rng.normal(size=3), rng.normal(size=3))),))
        z = pp(rng.normal(size=3), rng.normal(size=3))
        witness = affine_shift_witness(operator, z, 'x', POLICY)
        self.assertAlmostEqual(witness.residual, 0.0, delta=POLICY.tol_iter)

    def test_cross_operator_domain_exceeds_projection_of_dom_phi(self):
        """Test that D(T) is the whole line while dom phi is the origin"""
        self.assertTrue(fitzpatrick(cross_operator(), pp(1, 0), POLICY).is_plus_inf)
        self.assertTrue(fitzpatrick(cross_operator(), pp(1, 5), POLICY).is_plus_inf)
        self.assertTrue(m9_inclusion(cross_operator(), pp(0, 0), 'x', POLICY).in_hull)

    def test_tplus_point_inside_the_sampled_domain(self):
        """Test that x of a point of T+ lies in the hull of a sample spanning it"""
        two_points = PolygonalOperator.from_points([pp(0, 0), pp(1, 1)])
        witness = tplus_domain_inclusion(two_points, pp(2, 2), [pp(-3, 0), pp(3, 0)], POLICY)
        self.assertTrue(witness.in_hull)
        self.assertAlmostEqual(witness.distance, 0.0, delta=POLICY.tol_iter)

    def test_tplus_point_outside_the_sampled_domain(self):
        """Test that a sample missing x of a point of T+ is reported with its distance"""
        two_points = PolygonalOperator.from_points([pp(0, 0), pp(1, 1)])
        witness = tplus_domain_inclusion(two_points, pp(2, 2), [pp(0, 0), pp(1, 0)], POLICY)
        self.assertFalse(witness.in_hull)
        self.assertAlmostEqual(witness.distance, 1.0, delta=POLICY.tol_iter)

    def test_tplus_domain_inclusion_preconditions(self):
        """Test that points outside T+ and samples outside dom phi are rejected"""
        two_points = PolygonalOperator.from_points([pp(0, 0), pp(1, 1)])
        with self.assertRaises(PreconditionError):
            tplus_domain_inclusion(two_points, pp(1, -1), [pp(-3, 0), pp(3, 0)], POLICY)
        with self.assertRaises(PreconditionError):
            tplus_domain_inclusion(cross_operator(), pp(0, 0), [pp(1, 1), pp(-1, 2)], POLICY)


class ConstructionTests(SimpleTestCase):
    def test_negative_coupling_witness(self):
        """Test the negative-coupling witness inside dom phi"""
        w = negative_coupling_witness(origin(), pp(1, -1), POLICY)
        self.assertEqual(w, pp(0, 0))
        w = negative_coupling_witness(identity_line(), pp(1, -1), POLICY)
        self.assertTrue(w.allclose(pp(0, 0), 1e-12))
        two_points = PolygonalOperator.from_points([pp(0, 0), pp(2, 2)])
        self.assertEqual(negative_coupling_witness(two_points, pp(1, -1), POLICY), pp(0, 0))

    def test_negative_coupling_witness_outside_the_domain(self):
        """Test that with phi = +inf the witness comes from walking along the graph"""
        w = negative_coupling_witness(identity_line(), pp(0, 0) + pp(3, -3), POLICY)
        self.assertLess(coupling(pp(3, -3) - w), -POLICY.tol_exact)
        ray_line = PolygonalOperator((LinePiece(pp(0, 0), pp(1, 0)),))
        w = negative_coupling_witness(ray_line, pp(0, 1), POLICY)
        self.assertLess(coupling(pp(0, 1) - w), -POLICY.tol_exact)

    def test_boundary_point_examples(self):
        """Test the boundary point on the identity line and on a single point"""
        result = boundary_point(identity_line(), pp(1, -1), pp(0, 0), POLICY)
        self.assertEqual(result.t, 1.0)
        self.assertTrue(result.w.allclose(pp(0, 0), 1e-12))

        result = boundary_point(origin(), pp(1, -1), pp(0.5, 1), POLICY)
        self.assertAlmostEqual(result.t, 0.5, delta=1e-7)
        self.assertLessEqual(result.residual, POLICY.tol_iter)
        self.assertAlmostEqual(coupling(pp(1, -1) - result.w), result.t ** 2 * coupling(pp(0.5, -2)), delta=1e-9)

    def test_boundary_point_preconditions(self):
        """Test that the boundary point needs u in [phi <= c] and z above it"""
        with self.assertRaises(PreconditionError):
            boundary_point(identity_line(), pp(1, 1), pp(0, 0), POLICY)

    def test_segment_witness_examples(self):
        """Test that the segment point lands in [phi < c]"""
        self.assertEqual(segment_probe(origin(), pp(1, 1), 0.5, POLICY), pp(0, 0))
        two_points = PolygonalOperator.from_points([pp(0, 0), pp(3, 3)])
        w = segment_probe(two_points, pp(1, 1), 0.5, POLICY)
        self.assertLess(float(gap(two_points, 0.5 * pp(1, 1) + 0.5 * w, POLICY)), 0.0)
        self.assertEqual(segment_probe(origin(), pp(1, 1), 0.99, POLICY), pp(0, 0))

    def test_segment_witness_preconditions(self):
        """Test that z must lie in T+ and t in (0, 1)"""
        with self.assertRaises(PreconditionError):
            segment_probe(origin(), pp(1, -1), 0.5, POLICY)
        with self.assertRaises(PreconditionError):
            segment_probe(origin(), pp(1, 1), 1.0, POLICY)


class NIFalsifyTests(SimpleTestCase):
    def test_single_point_is_not_ni(self):
        """Test that sampling finds a negative gap for a single point"""
        result = ni_falsify(origin(), SamplerConfig(count=200, seed=3), POLICY)
        self.assertIsNotNone(result)
        self.assertAlmostEqual(float(gap(origin(), result.z, POLICY)), result.gap_value, delta=1e-12)

    def test_ni_families_survive(self):
        """Test that NI families are never falsified"""
        config = SamplerConfig(count=300, seed=4)
        self.assertIsNone(ni_falsify(identity_line(), config, POLICY))
        self.assertIsNone(ni_falsify(cross_operator(), config, POLICY))
        self.assertIsNone(ni_falsify(CubicOperator(), config, POLICY))
        self.assertIsNone(ni_falsify(LinearMonotoneOperator([[1.0, 2.0], [-2.0, 0.5]], [1.0, 0.0]), config, POLICY))

    def test_rejects_bad_operators_early(self):
        """Test that a non-monotone linear map is rejected at construction"""
        with self.assertRaises(ValidationError):
            LinearMonotoneOperator([[-1.0]], [0.0])
        self.assertIsInstance(ExtendedReal.finite(1.0), ExtendedReal)
