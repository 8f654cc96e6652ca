import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from core.models import TolerancePolicy
from core.strategies import seeds

from .models import GridFunction
from .utils import (
    biconjugate,
    brute_conjugate,
    default_dual_coords,
    fast_conjugate,
    fenchel_young_check,
    is_discretely_convex,
    sample_index_pairs,
)

POLICY = TolerancePolicy()
VALUES = st.floats(min_value=-10.0, max_value=10.0)


def square(coords):
    return GridFunction.from_callable(coords, lambda x: x * x)


@st.composite
def grid_functions(draw, min_size=1, max_size=512, convex=None, holes=None):
    """1-D grid functions on a seeded grid with nodes at least 0.001 apart; values, holes and convexity are drawn"""
    rng = np.random.default_rng(draw(seeds))
    coords = np.unique(np.round(rng.uniform(-3, 3, size=draw(st.integers(min_value=min_size, max_value=max_size))), 3))
    convex = draw(st.booleans()) if convex is None else convex
    if convex:
        a = draw(st.floats(min_value=0.1, max_value=2.0))
        b, c = draw(VALUES), draw(st.floats(min_value=-3.0, max_value=3.0))
        values = a * coords ** 2 + b * coords + np.abs(coords - c)
    else:
        values = draw(arrays(float, coords.size, elements=VALUES))
    if draw(st.booleans()) if holes is None else holes:
        mask = draw(arrays(bool, coords.size))
        values = np.where(mask, np.inf, values)
        values[draw(st.integers(min_value=0, max_value=coords.size - 1))] = 0.0
    return GridFunction(coords, values)


@st.composite
def planar_grid_functions(draw):
    rng = np.random.default_rng(draw(seeds))
    x = np.unique(np.round(rng.uniform(-2, 2, size=draw(st.integers(min_value=1, max_value=24))), 3))
    y = np.unique(np.round(rng.uniform(-2, 2, size=draw(st.integers(min_value=1, max_value=24))), 3))
    values = draw(arrays(float, (x.size, y.size), elements=st.one_of(VALUES, st.just(np.inf))))
    values[0, 0] = 0.0
    return GridFunction((x, y), values)


class GridFunctionTests(SimpleTestCase):
    def test_rejects_bad_grids(self):
        """Test rejecting repeated nodes, empty domains, -inf, NaN and shape mismatches"""
        with self.assertRaises(ValidationError):
            GridFunction([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
        with self.assertRaises(ValidationError):
            GridFunction([0.0, 1.0], [np.inf, np.inf])
        with self.assertRaises(ValidationError):
            GridFunction([0.0, 1.0], [0.0, -np.inf])
        with self.assertRaises(ValidationError):
            GridFunction([0.0, 1.0], [0.0, np.nan])
        with self.assertRaises(ValidationError):
            GridFunction([0.0, 1.0], [0.0, 1.0, 2.0])

    def test_two_dimensional_grid(self):
        """Test node lookup on a product grid"""
        f = GridFunction.from_callable(([0.0, 1.0, 2.0], [-1.0, 1.0]), lambda x, y: x + y)
        self.assertEqual(f.dimension, 2)
        self.assertEqual(f.shape, (3, 2))
        self.assertEqual(float(f.value((2, 1))), 3.0)
        assert_allclose(f.node((1, 0)), [1.0, -1.0])

    def test_resolution_bound(self):
        """Test mesh, slope bound and their product"""
        f = square(np.linspace(-2, 2, 5))
        self.assertEqual(f.mesh(), 1.0)
        self.assertEqual(f.slope_bound(), 3.0)
        self.assertEqual(f.resolution_bound(), 3.0)

    def test_default_dual_coords(self):
        """Test the padded slope window and its fallback"""
        f = square(np.linspace(-2, 2, 5))
        (axis,) = default_dual_coords(f)
        self.assertEqual(axis.size, 5)
        assert_allclose([axis[0], axis[-1]], [-3.3, 3.3])
        (fallback,) = default_dual_coords(GridFunction([0.0, 1.0], [0.0, np.inf]))
        assert_allclose([fallback[0], fallback[-1]], [-1.0, 1.0])


class BruteConjugateTests(SimpleTestCase):
    def test_indicator_of_origin(self):
        """Test that the indicator of the origin has conjugate zero"""
        f = GridFunction.indicator(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5) == 0)
        fstar = brute_conjugate(f, np.linspace(-10, 10, 21))
        assert_allclose(fstar.values, 0.0, atol=0.0)

    def test_square_vertex(self):
        """Test (x^2)*(1) = 1/4 up to the resolution bound"""
        f = square(np.linspace(-2, 2, 4001))
        fstar = brute_conjugate(f, [1.0])
        self.assertAlmostEqual(float(fstar.values[0]), 0.25, delta=f.resolution_bound())

    def test_absolute_value(self):
        """Test the conjugate of |x| on a bounded window"""
        coords = np.linspace(-2, 2, 401)
        f = GridFunction(coords, np.abs(coords))
        slopes = np.linspace(-1.5, 1.5, 31)
        fstar = brute_conjugate(f, slopes)
        expected = np.where(np.abs(slopes) <= 1, 0.0, 2 * (np.abs(slopes) - 1))
        assert_allclose(fstar.values, expected, atol=1e-12)


class FastConjugateTests(SimpleTestCase):
    def test_matches_brute_force_on_examples(self):
        """Test the linear-time transform against brute force on closed-form examples"""
        coords = np.linspace(-2, 2, 401)
        for f in (square(coords), GridFunction(coords, np.abs(coords)),
                  GridFunction.indicator(coords, np.isclose(coords, 0.0))):
            dual = default_dual_coords(f)
            assert_allclose(fast_conjugate(f, dual).values, brute_conjugate(f, dual).values, atol=1e-12, rtol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(grid_functions())
    def test_matches_brute_force(self, f):
        """Test the linear-time transform against brute force"""
        dual = default_dual_coords(f)
        assert_allclose(fast_conjugate(f, dual).values, brute_conjugate(f, dual).values, atol=1e-12, rtol=1e-12)

    def test_nonconvex_dip(self):
        """Test that the conjugate only sees the convex hull of f"""
        coords = np.linspace(-2, 2, 81)
        values = coords ** 2 + np.where(np.abs(coords - 0.5) < 0.2, -1.0, 0.0)
        f = GridFunction(coords, values)
        dual = default_dual_coords(f)
        assert_allclose(fast_conjugate(f, dual).values, brute_conjugate(f, dual).values, atol=1e-12, rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(planar_grid_functions())
    def test_two_dimensional_factorization(self, f):
        """Test the axis-by-axis transform on 2-D grids"""
        dual = default_dual_coords(f)
        assert_allclose(fast_conjugate(f, dual).values, brute_conjugate(f, dual).values, atol=1e-12, rtol=1e-12)

    def test_separable_square(self):
        """Test (x^2 + y^2)* = (s^2 + r^2)/4 up to the resolution bound"""
        axis = np.linspace(-2, 2, 81)
        f = GridFunction.from_callable((axis, axis), lambda x, y: x * x + y * y)
        dual = (np.linspace(-2, 2, 9), np.linspace(-2, 2, 9))
        fstar = fast_conjugate(f, dual)
        s, r = np.meshgrid(*dual, indexing='ij')
        assert_allclose(fstar.values, (s ** 2 + r ** 2) / 4, atol=f.resolution_bound())

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_order_reversal(self, data):
        """Test that f <= g gives g* <= f*"""
        f = data.draw(grid_functions(max_size=64, convex=False))
        offsets = data.draw(arrays(float, f.shape, elements=st.floats(min_value=0.0, max_value=1.0)))
        g = GridFunction(f.coords, f.values + offsets)
        dual = default_dual_coords(f)
        fstar, gstar = fast_conjugate(f, dual).values, fast_conjugate(g, dual).values
        self.assertTrue(np.all(gstar <= fstar + 1e-12 * np.maximum(1.0, np.abs(fstar))))

    @settings(max_examples=50, deadline=None)
    @given(grid_functions(min_size=3, max_size=128, convex=False))
    def test_conjugate_is_convex_on_the_dual_grid(self, f):
        """Test that the conjugate has nondecreasing slopes"""
        self.assertTrue(is_discretely_convex(fast_conjugate(f), 1e-9))


class BiconjugateTests(SimpleTestCase):
    def test_convex_square_is_recovered(self):
        """Test that a convex function is its own biconjugate up to resolution"""
        f = square(np.linspace(-2, 2, 401))
        assert_allclose(biconjugate(f).values, f.values, atol=f.resolution_bound())

    def test_two_point_indicator_fills_the_segment(self):
        """Test that the biconjugate of a two-point indicator is zero between them"""
        coords = np.linspace(-1, 1, 21)
        f = GridFunction.indicator(coords, np.isclose(np.abs(coords), 1.0))
        f2 = biconjugate(f, np.linspace(-2, 2, 41))
        assert_allclose(f2.values, 0.0, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(grid_functions(max_size=96, convex=False))
    def test_below_f_and_idempotent(self, f):
        """Test f** <= f, (f**)** = f** and convexity of f**"""
        tol_exact = TolerancePolicy.from_settings().tol_exact
        dual = default_dual_coords(f)
        once = biconjugate(f, dual)
        self.assertTrue(np.all(once.values <= f.values + tol_exact * np.maximum(1.0, np.abs(once.values))))
        assert_allclose(biconjugate(once, dual).values, once.values, atol=1e-9, rtol=0)
        self.assertTrue(is_discretely_convex(once, 1e-6))


class FenchelYoungTests(SimpleTestCase):
    def setUp(self):
        self.f = square(np.linspace(-2, 2, 9))
        self.fstar = brute_conjugate(self.f, [0.0, 1.0, 2.0])

    def test_examples(self):
        """Test a strict and a tight Fenchel-Young pair"""
        strict, tight = fenchel_young_check(self.f, self.fstar, [(6, 1), (6, 2)], POLICY)
        self.assertAlmostEqual(float(strict.slack), 0.25, delta=1e-12)
        self.assertAlmostEqual(float(tight.slack), 0.0, delta=1e-12)
        self.assertTrue(strict.passed and tight.passed)

    def test_indicator(self):
        """Test Fenchel-Young on an indicator, including +inf slack off its domain"""
        coords = np.linspace(-1, 1, 5)
        f = GridFunction.indicator(coords, coords == 0)
        fstar = brute_conjugate(f, np.linspace(-3, 3, 7))
        reports = fenchel_young_check(f, fstar, [(2, j) for j in range(7)], POLICY)
        self.assertTrue(all(report.passed and float(report.slack) == 0.0 for report in reports))
        self.assertTrue(fenchel_young_check(f, fstar, [(0, 3)], POLICY)[0].slack.is_plus_inf)

    @settings(max_examples=40, deadline=None)
    @given(grid_functions(max_size=200, convex=False, holes=True), seeds)
    def test_random_samples(self, f, seed):
        """Test <x, s> <= f(x) + f*(s) at sampled node pairs"""
        fstar = brute_conjugate(f)
        pairs = sample_index_pairs(f, fstar, np.random.default_rng(seed), 200)
        reports = fenchel_young_check(f, fstar, pairs, POLICY)
        self.assertTrue(all(report.passed for report in reports))
