import io
import json
import tempfile
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from hypothesis import given, settings

from conjugate.models import GridFunction
from conjugate.utils import brute_conjugate
from core.exceptions import OperatorSpecError, PreconditionError
from core.models import ExtendedReal, PairedPoint, TolerancePolicy
from core.strategies import seeds
from core.utils import coupling
from fitz.utils import support_shifted
from opmodel.models import LinearMonotoneOperator, PolygonalOperator
from opmodel.utils import is_monotone

from . import generators
from .formats import (
    format_number,
    grid_dump,
    read_grid_dump,
    read_grid_function,
    write_grid_function,
    write_reports,
)
from .models import SuiteReport
from .suites import SUITES, run_suite
from .utils import dump_operator, load_operator, load_replay, loads_operator, write_replay

POLICY = TolerancePolicy()

CROSS_SPEC = {
    'schema_version': 1,
    'kind': 'polygonal',
    'dimension': 1,
    'pieces': [
        {'type': 'line', 'base': {'x': [0], 'xstar': [0]}, 'dir': {'x': [1], 'xstar': [0]}},
        {'type': 'line', 'base': {'x': [0], 'xstar': [0]}, 'dir': {'x': [0], 'xstar': [1]}},
    ],
}

IDENTITY_SPEC = {
    'schema_version': 1,
    'kind': 'polygonal',
    'dimension': 1,
    'pieces': [{'type': 'line', 'base': {'x': [0], 'xstar': [0]}, 'dir': {'x': [1], 'xstar': [1]}}],
}


class FileTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name, content):
        path = self.tmp / name
        path.write_text(content if isinstance(content, str) else json.dumps(content))
        return path


class OperatorFileTests(FileTestCase):
    def test_cross_operator_file(self):
        """Test loading a polygonal operator file"""
        operator = load_operator(self.write('cross.json', CROSS_SPEC))
        self.assertIsInstance(operator, PolygonalOperator)
        self.assertEqual(len(operator.pieces), 2)

    def test_linear_identity_file(self):
        """Test loading a linear operator file"""
        operator = load_operator(self.write('id.json', {
            'schema_version': 1, 'kind': 'linear', 'dimension': 1, 'A': [[1]], 'b': [0],
        }))
        self.assertIsInstance(operator, LinearMonotoneOperator)
        np.testing.assert_array_equal(operator.A, [[1.0]])

    def test_linear_file_rejects_negative_symmetric_part(self):
        """Test that a non-monotone matrix is reported under its field"""
        path = self.write('neg.json', {'schema_version': 1, 'kind': 'linear', 'dimension': 1, 'A': [[-1]], 'b': [0]})
        with self.assertRaises(OperatorSpecError) as ctx:
            load_operator(path)
        self.assertIn('A', ctx.exception.errors)
        self.assertIn('min eigenvalue -1', ctx.exception.errors['A'])

    def test_missing_piece_field_is_reported_with_its_path(self):
        """Test that a missing piece field is reported with its index"""
        spec = dict(CROSS_SPEC, pieces=[CROSS_SPEC['pieces'][0], {'type': 'ray', 'base': {'x': [0], 'xstar': [0]}}])
        with self.assertRaises(OperatorSpecError) as ctx:
            load_operator(self.write('ray.json', spec))
        self.assertIn('pieces[1].dir', ctx.exception.errors)

    def test_piece_dimension_mismatch(self):
        """Test that a piece of the wrong dimension is rejected"""
        spec = dict(CROSS_SPEC, dimension=2)
        with self.assertRaises(OperatorSpecError) as ctx:
            load_operator(self.write('dim.json', spec))
        self.assertIn('pieces[0].base', ctx.exception.errors)

    def test_unsupported_schema_version(self):
        """Test that an unknown schema version is rejected"""
        with self.assertRaises(OperatorSpecError) as ctx:
            load_operator(self.write('v2.json', dict(CROSS_SPEC, schema_version=2)))
        self.assertIn('schema_version', ctx.exception.errors)

    def test_json_syntax_error_carries_location(self):
        """Test that a JSON syntax error names its line"""
        with self.assertRaises(OperatorSpecError) as ctx:
            load_operator(self.write('broken.json', '{"kind": }'))
        self.assertIn('line 1', str(ctx.exception))

    def test_missing_file(self):
        """Test that a missing file is an operator file error"""
        with self.assertRaises(OperatorSpecError):
            load_operator(self.tmp / 'absent.json')

    def test_dump_and_reload(self):
        """Test that a dumped staircase reloads with the same pieces"""
        operator = generators.gen_maximal_1d(3)
        reloaded = loads_operator(dump_operator(operator))
        self.assertEqual(len(reloaded.pieces), len(operator.pieces))
        for piece, again in zip(operator.pieces, reloaded.pieces):
            self.assertEqual(piece.kind, again.kind)
            self.assertTrue(piece.base.allclose(again.base, 0.0))

    def test_replay_file(self):
        """Test writing and reading back a replay file"""
        operator = generators.identity_line()
        path = write_replay(self.tmp, 'main', 12, operator, {'z': {'x': [1.0], 'xstar': [2.0]}}, 'example')
        self.assertEqual(path.name, 'main-000012.json')
        reloaded, inputs = load_replay(path)
        self.assertEqual(reloaded.kind, 'polygonal')
        self.assertEqual(inputs['z'], {'x': [1.0], 'xstar': [2.0]})


class GeneratorTests(SimpleTestCase):
    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_maximal_staircase_is_monotone(self, seed):
        """Test that staircases are monotone and end in rays"""
        operator = generators.gen_maximal_1d(seed)
        self.assertTrue(is_monotone(operator, POLICY))
        self.assertEqual(operator.pieces[0].kind, 'ray')
        self.assertEqual(operator.pieces[-1].kind, 'ray')

    def test_point_cloud_with_forced_points(self):
        """Test that forced points are kept when they are monotonically related"""
        forced = [PairedPoint([0.0], [0.0]), PairedPoint([1.0], [1.0])]
        operator = generators.gen_point_cloud_monotone(1, 2, 5, forced=forced)
        self.assertEqual(len(operator), 2)
        self.assertTrue(is_monotone(operator, POLICY))

    def test_point_cloud_rejects_unrelated_forced_points(self):
        """Test that non-monotone forced points are a precondition error"""
        forced = [PairedPoint([0.0], [1.0]), PairedPoint([1.0], [0.0])]
        with self.assertRaises(PreconditionError):
            generators.gen_point_cloud_monotone(1, 3, 5, forced=forced)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_point_clouds_are_monotone(self, seed):
        """Test that generated point clouds are monotone"""
        self.assertTrue(is_monotone(generators.gen_point_cloud_monotone(3, 6, seed), POLICY))

    @given(seeds)
    def test_linear_symmetric_part_is_psd(self, seed):
        """Test that generated linear maps have a PSD symmetric part"""
        operator = generators.gen_linear_monotone(3, seed)
        self.assertGreaterEqual(np.linalg.eigvalsh(0.5 * (operator.A + operator.A.T)).min(), -1e-12)

    def test_generators_are_reproducible(self):
        """Test that a seed fixes the generated operator"""
        first, second = generators.gen_linear_monotone(4, 11), generators.gen_linear_monotone(4, 11)
        np.testing.assert_array_equal(first.A, second.A)
        np.testing.assert_array_equal(first.b, second.b)

    @given(seeds)
    def test_null_coupling_direction(self, seed):
        """Test that null directions have zero coupling"""
        direction = generators.null_coupling_direction(3, np.random.default_rng(seed))
        self.assertAlmostEqual(coupling(direction), 0.0, delta=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_support_direction_gives_finite_support(self, seed):
        """Test that support directions have a finite shifted support"""
        rng = np.random.default_rng(seed)
        for operator in (generators.gen_linear_monotone(2, 4), generators.gen_maximal_1d(4),
                         generators.identity_line(), generators.cubic()):
            z = generators.sample_z(operator, rng)
            p = generators.support_direction(operator, rng)
            self.assertTrue(support_shifted(operator, z, p, POLICY).is_finite, msg=operator.kind)


class FormatTests(SimpleTestCase):
    def test_identity_grid(self):
        """Test the gap landscape of the identity line"""
        text = grid_dump(generators.identity_line(), (-2, 2, -2, 2), 5, policy=POLICY)
        rows = read_grid_dump(text)
        self.assertEqual(len(rows), 25)
        for row in rows:
            x, xstar = float(row['x']), float(row['xstar'])
            self.assertAlmostEqual(float(row['gap']), (x - xstar) ** 2 / 4, delta=1e-9)

    def test_cross_grid_is_infinite_off_the_origin(self):
        """Test the landscape of the cross operator"""
        text = grid_dump(generators.cross_operator(), (-2, 2, -2, 2), 5, policy=POLICY)
        lines = text.split('\n')
        self.assertEqual(lines[0], 'x,xstar,phi,c,gap')
        self.assertIn('0,0,0,0,0', lines)
        for row in read_grid_dump(text):
            if float(row['x']) == 0 and float(row['xstar']) == 0:
                continue
            self.assertTrue(row['gap'].is_plus_inf)

    def test_point_operator_has_zero_phi(self):
        """Test that phi of the origin singleton is zero on the grid"""
        operator = generators.singleton(PairedPoint([0.0], [0.0]))
        for row in read_grid_dump(grid_dump(operator, (-1, 1, -1, 1), 3, policy=POLICY)):
            self.assertEqual(row['phi'], 0.0)

    def test_grid_dump_needs_dimension_one(self):
        """Test that landscapes need a one-dimensional operator"""
        with self.assertRaises(PreconditionError):
            grid_dump(generators.gen_linear_monotone(2, 0), (-1, 1, -1, 1), 3)

    def test_grid_dump_uses_lf_and_reparses_exactly(self):
        """Test LF line endings and exact reparsing of a landscape"""
        operator = generators.gen_maximal_1d(2)
        text = grid_dump(operator, (-3, 3, -3, 3), 7, policy=POLICY)
        self.assertNotIn('\r', text)
        for row, line in zip(read_grid_dump(text), text.split('\n')[1:]):
            self.assertEqual(','.join(format_number(value) for value in row.values()), line)

    def test_format_number(self):
        """Test number formatting of zeros, integers and infinities"""
        self.assertEqual(format_number(0.0), '0')
        self.assertEqual(format_number(-0.0), '0')
        self.assertEqual(format_number(2.0), '2')
        self.assertEqual(format_number(-1.5), '-1.5')
        self.assertEqual(format_number(float('inf')), 'inf')
        self.assertEqual(format_number(float('-inf')), '-inf')

    def test_grid_function_csv(self):
        """Test the CSV form of a 1-D grid function with an infinite value"""
        values = np.linspace(-2, 2, 9) ** 2
        values[0] = np.inf
        f = GridFunction(np.linspace(-2, 2, 9), values)
        text = write_grid_function(f)
        self.assertTrue(text.startswith('x,value\n-2,inf\n'))
        again = read_grid_function(text)
        np.testing.assert_array_equal(again.coords[0], f.coords[0])
        np.testing.assert_array_equal(again.values, f.values)

    def test_two_dimensional_grid_function_csv(self):
        """Test the CSV form of a 2-D grid function"""
        f = GridFunction.from_callable(([0.0, 1.0], [-1.0, 0.5, 2.0]), lambda x, y: x + y * y)
        again = read_grid_function(write_grid_function(f))
        self.assertEqual(again.shape, (2, 3))
        np.testing.assert_array_equal(again.values, f.values)

    def test_incomplete_grid_function_is_rejected(self):
        """Test that missing grid nodes and NaN values are rejected"""
        with self.assertRaises(OperatorSpecError):
            read_grid_function('x,y,value\n0,0,1\n0,1,2\n1,0,3\n')
        with self.assertRaises(OperatorSpecError):
            read_grid_function('x,value\n0,nan\n')


class SuiteTests(FileTestCase):
    def test_unknown_suite(self):
        """Test that an unknown suite is a precondition error"""
        with self.assertRaises(PreconditionError):
            run_suite('no-such-suite', 7, 3)

    def test_counts_add_up(self):
        """Test that pass, fail and indeterminate add up to the count"""
        report = run_suite('main', 7, 12, POLICY)
        self.assertEqual(report.passed + report.failed + report.indeterminate, 12)
        self.assertEqual(report.failed, 0)
        self.assertGreaterEqual(report.worst_slack, -POLICY.tol_slack)

    def test_reports_are_deterministic(self):
        """Test that reports do not depend on repetition or worker count"""
        first = write_reports([run_suite('m4', 7, 10, POLICY)])
        second = write_reports([run_suite('m4', 7, 10, POLICY)])
        threaded = write_reports([run_suite('m4', 7, 10, POLICY, workers=3)])
        self.assertEqual(first, second)
        self.assertEqual(first, threaded)

    def test_every_suite_passes_a_small_run(self):
        """Test that every registered suite passes a short run"""
        for name in SUITES:
            with self.subTest(suite=name):
                report = run_suite(name, 7, 6, POLICY, replay_dir=str(self.tmp))
                self.assertEqual(report.failed, 0, msg=report.as_text())
                self.assertEqual(report.passed + report.indeterminate, 6)

    def test_sup_bound_and_sign_implications_hold_on_ni_instances(self):
        """Test that m3 and r1 draw z from dom phi and never fail"""
        for name in ('m3', 'r1'):
            with self.subTest(suite=name):
                report = run_suite(name, 7, 150, POLICY)
                self.assertEqual(report.failed, 0, msg=report.as_text())
                self.assertGreater(report.passed, 0)

    def test_boundary_resample_rate_stays_small(self):
        """Test that constructive witnesses succeed with under 5% re-sampled boundary draws"""
        report = run_suite('prop-i-ii-iii', 7, 90, POLICY)
        self.assertEqual(report.failed, 0, msg=report.as_text())
        self.assertGreaterEqual(report.resampled, 0)
        self.assertLess(report.resample_rate, 0.05)
        self.assertIsNotNone(report.worst_slack)
        self.assertGreaterEqual(report.worst_slack, -POLICY.tol_slack)

    def test_witness_suites_report_a_worst_slack(self):
        """Test that inclusion and witness suites report their margins"""
        for name in ('m9', 'eq3-eq4', 'i1-i3', 'prop-i-ii-iii'):
            with self.subTest(suite=name):
                report = run_suite(name, 7, 12, POLICY)
                self.assertIsNotNone(report.worst_slack, msg=report.as_text())
                self.assertGreaterEqual(report.worst_slack, -POLICY.tol_slack)

    def test_verdict_suites_leave_worst_slack_unset(self):
        """Test that pure verdict suites report no worst slack"""
        for name in ('cross', 'r1'):
            with self.subTest(suite=name):
                report = run_suite(name, 7, 6, POLICY)
                self.assertIsNone(report.worst_slack)
                self.assertIn('worst_slack=n/a', report.as_text())

    def test_eq3_eq4_samples_dom_phi_around_tplus(self):
        """Test that x of T+ points lies in the hull of a dom phi sample"""
        report = run_suite('eq3-eq4', 7, 20, POLICY)
        self.assertEqual(report.failed, 0, msg=report.as_text())
        self.assertGreater(report.passed, 0)

    def test_text_report(self):
        """Test the text report header and counts"""
        text = write_reports([run_suite('cross', 7, 3, POLICY)], fmt='text')
        self.assertIn('suite cross seed=7 count=3', text)
        self.assertIn('pass=3 fail=0', text)

    def test_text_report_shows_resampled_instances(self):
        """Test that re-sampled draws appear in the text report and the rate"""
        report = SuiteReport('prop-i-ii-iii', 7, 40, 40, 0, 0, ExtendedReal.finite(0.5), resampled=2)
        self.assertIn('re-sampled boundary instances: 2', report.as_text())
        self.assertAlmostEqual(report.resample_rate, 0.05)
        quiet = SuiteReport('prop-i-ii-iii', 7, 40, 40, 0, 0, None)
        self.assertNotIn('re-sampled', quiet.as_text())
        self.assertEqual(quiet.resample_rate, 0.0)


class CommandTests(FileTestCase):
    def run_command(self, *args):
        out = io.StringIO()
        call_command('fitz', *args, stdout=out)
        return out.getvalue()

    def values(self, text):
        return dict(line.split(': ', 1) for line in text.strip().split('\n'))

    def test_check_csv(self):
        """Test the CSV output of check"""
        text = self.run_command('check', 'main', '--count', '5', '--format', 'csv')
        lines = text.strip().split('\n')
        self.assertEqual(lines[0], 'suite,seed,count,pass,fail,indeterminate,worst_slack')
        self.assertTrue(lines[1].startswith('main,7,5,5,0,0,'))

    def test_check_unknown_suite_is_a_usage_error(self):
        """Test that an unknown suite exits with code 2"""
        with self.assertRaises(CommandError) as ctx:
            self.run_command('check', 'no-such-suite')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_eval(self):
        """Test eval on the identity line"""
        path = self.write('id.json', IDENTITY_SPEC)
        values = self.values(self.run_command('eval', str(path), '--x', '1', '--xstar', '1'))
        self.assertAlmostEqual(float(values['phi']), 1.0, delta=1e-12)
        self.assertAlmostEqual(float(values['gap']), 0.0, delta=1e-12)

    def test_eval_csv(self):
        """Test eval CSV output with infinite values"""
        path = self.write('cross.json', CROSS_SPEC)
        text = self.run_command('eval', str(path), '--x', '1', '--xstar', '1', '--format', 'csv')
        self.assertEqual(text, 'phi,c,gap\ninf,1,inf\n')

    def test_eval_replay(self):
        """Test that eval re-evaluates a replay file"""
        path = write_replay(self.tmp, 'm2', 0, generators.identity_line(), {'z': {'x': [3.0], 'xstar': [1.0]}})
        values = self.values(self.run_command('eval', '--replay', str(path)))
        self.assertAlmostEqual(float(values['gap']), 1.0, delta=1e-12)

    def test_gap_needs_an_operator(self):
        """Test that gap without an operator exits with code 2"""
        with self.assertRaises(CommandError) as ctx:
            self.run_command('gap', '--x', '1', '--xstar', '1')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_operator_file(self):
        """Test that a missing operator file exits with code 2"""
        with self.assertRaises(CommandError) as ctx:
            self.run_command('gap', str(self.tmp / 'absent.json'), '--x', '1', '--xstar', '1')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_support(self):
        """Test support output for infinite and finite values"""
        path = self.write('id.json', IDENTITY_SPEC)
        values = self.values(self.run_command('support', str(path), '--x', '0', '--xstar', '0',
                                              '--px', '1', '--pxstar', '1'))
        self.assertEqual(values['sigma'], 'inf')
        values = self.values(self.run_command('support', str(path), '--x', '0', '--xstar', '0',
                                              '--px', '1', '--pxstar=-1'))
        self.assertAlmostEqual(float(values['sigma']), 0.0, delta=1e-12)

    def test_tplus(self):
        """Test T+ membership output"""
        path = self.write('id.json', IDENTITY_SPEC)
        self.assertEqual(self.values(self.run_command('tplus', str(path), '--x', '1', '--xstar', '1'))['in_tplus'], 'yes')
        self.assertEqual(self.values(self.run_command('tplus', str(path), '--x', '2', '--xstar', '3'))['in_tplus'], 'no')

    def test_project(self):
        """Test the projection distance and the distance bound slack"""
        path = self.write('id.json', IDENTITY_SPEC)
        values = self.values(self.run_command('project', str(path), '--x', '1', '--xstar=-1'))
        self.assertAlmostEqual(float(values['distance']), np.sqrt(2), delta=1e-7)
        self.assertGreaterEqual(float(values['m7_slack']), -1e-7)

    def test_grid(self):
        """Test the grid subcommand on the cross operator"""
        path = self.write('cross.json', CROSS_SPEC)
        text = self.run_command('grid', str(path), '--window=-2,2,-2,2', '--resolution', '5')
        self.assertEqual(len(text.strip().split('\n')), 26)
        self.assertIn('0,0,0,0,0', text.split('\n'))

    def test_grid_rejects_higher_dimensions(self):
        """Test that grid rejects operators of dimension above one"""
        path = self.write('lin.json', {'schema_version': 1, 'kind': 'linear', 'dimension': 2,
                                       'A': [[1, 0], [0, 1]], 'b': [0, 0]})
        with self.assertRaises(CommandError) as ctx:
            self.run_command('grid', str(path))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_conj(self):
        """Test the brute conjugate subcommand"""
        f = GridFunction(np.linspace(-2, 2, 9), np.linspace(-2, 2, 9) ** 2)
        path = self.write('square.csv', write_grid_function(f))
        text = self.run_command('conj', str(path), '--method', 'brute', '--dual=-1,1,5')
        conjugate = read_grid_function(text)
        expected = brute_conjugate(f, np.linspace(-1, 1, 5))
        np.testing.assert_allclose(conjugate.values, expected.values, rtol=0, atol=1e-12)
