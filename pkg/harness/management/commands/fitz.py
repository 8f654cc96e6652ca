import argparse
import csv
import io
import logging
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from conjugate.utils import biconjugate, brute_conjugate, fast_conjugate
from core.exceptions import (
    DimensionMismatchError,
    FitzlabError,
    NonConvergenceError,
    OperatorSpecError,
    PreconditionError,
)
from core.models import PairedPoint, TolerancePolicy, WeightedNorm
from core.utils import coupling
from fitz.estimates import estimate_m7
from fitz.utils import fitzpatrick, gap, monotonically_related_gap, support_shifted, tplus_contains
from harness.formats import format_number, grid_dump, read_grid_function, write_grid_function, write_reports
from harness.suites import SUITES, run_suite
from harness.utils import load_operator, load_replay, parse_vector, point_from_dict
from hull.utils import project
from opmodel.utils import graph_hull

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3


class Command(BaseCommand):
    help = 'Evaluate Fitzpatrick functions, conjugates and randomized checks from the command line'

    def add_arguments(self, parser):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--seed', type=int, help='Base seed of randomized suites')
        common.add_argument('--count', type=int, help='Instances per suite')
        common.add_argument('--tol-exact', type=float, help='Tolerance of exact comparisons')
        common.add_argument('--tol-iter', type=float, help='Tolerance of iterative solvers')
        common.add_argument('--tol-slack', type=float, help='Allowed negative slack of an inequality')
        common.add_argument('--delta', type=float, default=1.0, help='Weight of the pair norm')
        common.add_argument('--format', choices=('text', 'csv'), default='text', help='Output format')

        point = argparse.ArgumentParser(add_help=False)
        point.add_argument('operator', nargs='?', help='Operator spec file (JSON)')
        point.add_argument('--x', help='Comma-separated x, e.g. --x=1,-2')
        point.add_argument('--xstar', help='Comma-separated x*')

        subparsers = parser.add_subparsers(dest='subcommand', required=True)

        evaluate = subparsers.add_parser('eval', parents=[common, point], help='phi_T, c and gap at a point')
        evaluate.add_argument('--replay', help='Replay file written by a failed suite instance')

        subparsers.add_parser('gap', parents=[common, point], help='phi_T(z) - c(z)')

        support = subparsers.add_parser('support', parents=[common, point], help='sigma_{T-z}(p)')
        support.add_argument('--px', required=True, help='Comma-separated x part of p')
        support.add_argument('--pxstar', required=True, help='Comma-separated x* part of p')

        subparsers.add_parser('tplus', parents=[common, point], help='Membership of z in T+')
        subparsers.add_parser('project', parents=[common, point],
                              help='delta-projection of z onto conv Graph T and the m7 bound')

        conj = subparsers.add_parser('conj', parents=[common], help='Discrete conjugate of a grid function CSV')
        conj.add_argument('grid', help='Grid function CSV (x,value or x,y,value)')
        conj.add_argument('--dual', action='append',
                          help='lo,hi,count of a dual axis; repeat once per axis')
        conj.add_argument('--method', choices=('fast', 'brute', 'biconjugate'), default='fast')

        check = subparsers.add_parser('check', parents=[common], help='Run randomized suites')
        check.add_argument('suites', nargs='+', help=f"Suite names or 'all': {', '.join(SUITES)}")
        check.add_argument('--workers', type=int, help='Threads running suite instances')
        check.add_argument('--replay-dir', help='Directory receiving replay files of failed instances')

        grid = subparsers.add_parser('grid', parents=[common], help='CSV landscape of phi and gap for a 1-D operator')
        grid.add_argument('operator', help='Operator spec file (JSON)')
        grid.add_argument('--window', default='-2,2,-2,2', help='xmin,xmax,ymin,ymax')
        grid.add_argument('--resolution', type=int, default=21)

    def handle(self, *args, **options):
        handler = getattr(self, f"handle_{options['subcommand']}")
        try:
            policy = TolerancePolicy.from_settings(
                tol_exact=options['tol_exact'], tol_iter=options['tol_iter'], tol_slack=options['tol_slack'])
            handler(options, policy)
        except NonConvergenceError as exc:
            logger.error(f"Non-convergence: {exc}", exc_info=True)
            raise CommandError(str(exc), returncode=EXIT_NONCONVERGENCE)
        except (OperatorSpecError, PreconditionError, DimensionMismatchError) as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE)
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages), returncode=EXIT_USAGE)
        except FitzlabError as exc:
            logger.error(f"{options['subcommand']} failed: {exc}", exc_info=True)
            raise CommandError(str(exc), returncode=EXIT_FAILURE)

    def _emit(self, options, values):
        if options['format'] == 'csv':
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator='\n')
            writer.writerow(values.keys())
            writer.writerow(values.values())
            self.stdout.write(buffer.getvalue(), ending='')
        else:
            for key, value in values.items():
                self.stdout.write(f'{key}: {value}')

    def _operator_and_point(self, options):
        if not options['operator']:
            raise OperatorSpecError('An operator file is required')
        operator = load_operator(options['operator'])
        if options['x'] is None or options['xstar'] is None:
            raise OperatorSpecError('Both --x and --xstar are required')
        return operator, PairedPoint(parse_vector(options['x']), parse_vector(options['xstar']))

    def handle_eval(self, options, policy):
        if options['replay']:
            operator, inputs = load_replay(options['replay'])
            if 'z' not in inputs:
                raise OperatorSpecError(f"{options['replay']}: replay carries no point z")
            z = point_from_dict(inputs['z'])
        else:
            operator, z = self._operator_and_point(options)
        phi = fitzpatrick(operator, z, policy)
        c = coupling(z)
        self._emit(options, {'phi': format_number(phi), 'c': format_number(c), 'gap': format_number(phi - c)})

    def handle_gap(self, options, policy):
        operator, z = self._operator_and_point(options)
        self._emit(options, {'gap': format_number(gap(operator, z, policy))})

    def handle_support(self, options, policy):
        operator, z = self._operator_and_point(options)
        p = PairedPoint(parse_vector(options['px']), parse_vector(options['pxstar']))
        sigma = support_shifted(operator, z, p, policy)
        self._emit(options, {'sigma': format_number(sigma), 'c(p)': format_number(coupling(p))})

    def handle_tplus(self, options, policy):
        operator, z = self._operator_and_point(options)
        self._emit(options, {
            'in_tplus': 'yes' if tplus_contains(operator, z, policy) else 'no',
            'inf_coupling': format_number(monotonically_related_gap(operator, z, policy)),
        })

    def handle_project(self, options, policy):
        operator, z = self._operator_and_point(options)
        norm = WeightedNorm(options['delta'])
        hull = graph_hull(operator)
        result = project(hull, z.as_vector(), norm, policy)
        bound = estimate_m7(operator, z, hull, norm, policy)
        projected = PairedPoint.from_vector(result.point)
        self._emit(options, {
            'distance': format_number(result.distance),
            'x': ' '.join(format_number(v) for v in projected.x),
            'xstar': ' '.join(format_number(v) for v in projected.xstar),
            'iterations': result.iterations,
            'm7_slack': format_number(bound.slack),
        })

    def handle_conj(self, options, policy):
        path = Path(options['grid'])
        try:
            f = read_grid_function(path.read_text())
        except OSError as exc:
            raise OperatorSpecError(f"{path}: {exc.strerror or exc}")
        dual = None
        if options['dual']:
            dual = []
            for text in options['dual']:
                bounds = parse_vector(text)
                if bounds.size != 3 or bounds[2] < 1 or bounds[0] > bounds[1]:
                    raise OperatorSpecError(f"--dual expects lo,hi,count, got {text!r}")
                dual.append(np.linspace(bounds[0], bounds[1], int(bounds[2])))
        method = {'fast': fast_conjugate, 'brute': brute_conjugate, 'biconjugate': biconjugate}[options['method']]
        self.stdout.write(write_grid_function(method(f, dual)), ending='')

    def handle_check(self, options, policy):
        names = list(SUITES) if options['suites'] == ['all'] else options['suites']
        unknown = [name for name in names if name not in SUITES]
        if unknown:
            raise PreconditionError(f"Unknown suite(s): {', '.join(unknown)}")

        reports = [
            run_suite(name, options['seed'], options['count'], policy, options['workers'], options['replay_dir'])
            for name in names
        ]
        self.stdout.write(write_reports(reports, fmt=options['format']), ending='')

        failed = [report.suite for report in reports if not report.ok]
        if failed:
            raise CommandError(f"Failures in: {', '.join(failed)}", returncode=EXIT_FAILURE)
        if any(report.nonconverged for report in reports):
            raise CommandError('Some projections did not converge', returncode=EXIT_NONCONVERGENCE)

    def handle_grid(self, options, policy):
        window = parse_vector(options['window'])
        if window.size != 4:
            raise OperatorSpecError(f"--window expects xmin,xmax,ymin,ymax, got {options['window']!r}")
        operator = load_operator(options['operator'])
        self.stdout.write(grid_dump(operator, window, options['resolution'], policy=policy), ending='')
