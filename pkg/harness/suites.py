# harness/suites.py
"""Randomized suites, one per estimate, identity or proposition.

Every instance draws from its own generator seeded with (seed, index), so a
report depends only on (suite, seed, count), whatever the worker count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from conjugate.models import GridFunction
from conjugate.utils import (
    biconjugate,
    brute_conjugate,
    default_dual_coords,
    fast_conjugate,
    fenchel_young_check,
    sample_index_pairs,
)
from core.exceptions import (
    DomainExitError,
    FitzlabError,
    IndeterminateFormError,
    NonConvergenceError,
    NIViolationError,
    PreconditionError,
    R1ViolationError,
)
from core.models import MINUS_INF, ExtendedReal, PairedPoint, TolerancePolicy, WeightedNorm
from core.utils import coupling, extended_min
from fitz.constructions import boundary_point, negative_coupling_witness, segment_probe
from fitz.estimates import (
    affine_shift_witness,
    default_m3_candidates,
    estimate_i2,
    estimate_i3,
    estimate_m2,
    estimate_m3,
    estimate_m4,
    estimate_m7,
    estimate_main,
    m9_inclusion,
    projection_inclusion,
    r1_implications,
    tplus_domain_inclusion,
)
from fitz.models import SamplerConfig, SlackReport
from fitz.utils import fitzpatrick, gap, monotonically_related_gap, ni_falsify, tplus_contains
from hull.utils import lemma_argmin_sigma_check, project
from opmodel.models import CubicOperator, LinearMonotoneOperator, PolygonalOperator
from opmodel.utils import domain_hull, graph_hull, is_monotone

from . import generators
from .models import FAIL, INDETERMINATE, PASS, InstanceOutcome, SuiteReport
from .utils import point_to_dict, write_replay

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Suite:
    name: str
    description: str
    run: Callable


SUITES = {}


def suite(name, description):
    def register(fn):
        SUITES[name] = Suite(name, description, fn)
        return fn
    return register


def _outcome(report, operator=None, **inputs):
    return InstanceOutcome(PASS if report.passed else FAIL, report.slack, operator, _jsonable(inputs),
                           f'{report.label}: lhs={report.lhs} rhs={report.rhs}')


def _verdict(ok, operator=None, detail='', slack=None, **inputs):
    return InstanceOutcome(PASS if ok else FAIL, slack, operator, _jsonable(inputs), detail)


def _jsonable(inputs):
    out = {}
    for key, value in inputs.items():
        if isinstance(value, PairedPoint):
            out[key] = point_to_dict(value)
        elif isinstance(value, (list, tuple)) and value and isinstance(value[0], PairedPoint):
            out[key] = [point_to_dict(item) for item in value]
        else:
            out[key] = value
    return out


def _worst(reports):
    worst = extended_min(report.slack for report in reports)
    return worst


def _finite_gap_point(operator, rng, policy, attempts=20):
    """A sampled z in dom phi_T, or None"""
    n = operator.dimension
    for _ in range(attempts):
        z = generators.sample_z(operator, rng)
        if isinstance(operator, LinearMonotoneOperator) and rng.uniform() < 0.5:
            # (a, Aa + b) + (0, S v) keeps A'x + x* - b in the range of S
            z = operator.graph_point(rng.normal(size=n)) + PairedPoint(np.zeros(n), operator.symmetric @ rng.normal(size=n))
        if gap(operator, z, policy).is_finite:
            return z
    for z in (operator.sample_graph_point(rng), PairedPoint.zeros(n)):
        if gap(operator, z, policy).is_finite:
            return z
    return None


def _gap_above(operator, rng, policy, attempts=40):
    """A sampled z with tol_slack < gap(z) < +inf, or None"""
    for _ in range(attempts):
        z = _finite_gap_point(operator, rng, policy, attempts=5)
        if z is not None and gap(operator, z, policy) > policy.tol_slack:
            return z
    return None


def _is_maximal_family(operator):
    return isinstance(operator, (LinearMonotoneOperator, CubicOperator))


@suite('main', 'gap(z + tp) <= gap(z) - t^2 c(p) + t sigma_{T-z}(p) for every operator')
def run_main(rng, policy):
    operator = generators.any_operator(rng)
    z, p = generators.sample_z(operator, rng), generators.sample_p(operator, rng)
    t = float(rng.uniform(0.0, 10.0))
    return _outcome(estimate_main(operator, z, p, t, policy), operator, z=z, p=p, t=t)


@suite('m2', 'gap(z) >= t^2 c(p) - t sigma_{T-z}(p) on NI operators')
def run_m2(rng, policy):
    operator = generators.ni_operator(rng)
    z, p = generators.sample_z(operator, rng), generators.sample_p(operator, rng)
    t = float(rng.uniform(0.0, 3.0))
    return _outcome(estimate_m2(operator, z, p, t, policy), operator, z=z, p=p, t=t)


@suite('m3', 'gap(z) >= -sigma^2 / 4c(p) over candidate directions on NI operators')
def run_m3(rng, policy):
    operator = generators.ni_operator(rng)
    z = _finite_gap_point(operator, rng, policy)
    if z is None:
        return InstanceOutcome(INDETERMINATE, operator=operator, detail='no point of dom phi sampled')
    candidates = default_m3_candidates(operator.dimension, rng)
    candidates += [generators.support_direction(operator, rng) for _ in range(8)]
    try:
        report = estimate_m3(operator, z, candidates, policy)
    except R1ViolationError as exc:
        return _verdict(False, operator, str(exc), z=z)
    return _outcome(report, operator, z=z)


@suite('m4', 'sigma_{T-z}(p) + 2 sqrt(gap(z)) sqrt(|c(p)|) >= 0 on NI operators')
def run_m4(rng, policy):
    operator = generators.ni_operator(rng)
    z, p = generators.sample_z(operator, rng), generators.sample_p(operator, rng)
    try:
        report = estimate_m4(operator, z, p, policy)
    except NIViolationError as exc:
        return _verdict(False, operator, str(exc), z=z, p=p)
    return _outcome(report, operator, z=z, p=p)


@suite('m7', 'gap(z) >= 1/2 dist_delta^2(z, conv Graph T) on NI operators')
def run_m7(rng, policy):
    operator = generators.ni_operator(rng)
    z = _finite_gap_point(operator, rng, policy) or generators.sample_z(operator, rng)
    delta = float(rng.choice([1.0, 0.1, 10.0]))
    report = estimate_m7(operator, z, graph_hull(operator), WeightedNorm(delta), policy)
    return _outcome(report, operator, z=z, delta=delta)


@suite('m9', 'x in conv D(T) or a shift along a separating direction reaches [phi <= c]; same for aff D(T)')
def run_m9(rng, policy):
    operator = generators.any_operator(rng)
    z = _finite_gap_point(operator, rng, policy)
    if z is None:
        return InstanceOutcome(INDETERMINATE, operator=operator, detail='no point of dom phi sampled')

    problems = []
    slacks = []
    for side in ('x', 'xstar'):
        inclusion = m9_inclusion(operator, z, side, policy)
        if inclusion.in_hull:
            slacks.append(policy.tol_iter - inclusion.distance)
        elif inclusion.point is not None:
            slacks.append(-inclusion.gap_value)
        else:
            slacks.append(MINUS_INF)
            problems.append(f'projection inclusion fails on side {side}')
        shift = affine_shift_witness(operator, z, side, policy)
        if not shift.in_hull:
            margin = policy.tol_iter * max(1.0, abs(shift.gamma)) - abs(shift.residual)
            slacks.append(margin)
            if margin < 0:
                problems.append(f'affine shift on side {side} misses [phi = c] by {shift.residual:.3e}')
    return _verdict(not problems, operator, '; '.join(problems), slack=extended_min(slacks), z=z)


@suite('eq5-identity', 'phi_T(z) + inf c(z - alpha) = c(z); phi = +inf exactly when the inf is -inf')
def run_eq5_identity(rng, policy):
    operator = generators.any_operator(rng)
    z = generators.sample_z(operator, rng)
    phi = fitzpatrick(operator, z, policy)
    related = monotonically_related_gap(operator, z, policy)
    if phi.is_plus_inf or related.is_minus_inf:
        ok = phi.is_plus_inf and related.is_minus_inf
        return _verdict(ok, operator, f'phi={phi} inf={related}', z=z)
    c = coupling(z)
    error = abs(float(phi) + float(related) - c)
    report = SlackReport.evaluate(error / max(1.0, abs(c), abs(float(phi))), 0.0, policy, 'eq5-identity')
    return _outcome(report, operator, z=z)


@suite('i1-i3', 'coupling of convex combinations, convexity of phi and the segment bound from [phi <= c]')
def run_i1_i3(rng, policy):
    operator = generators.any_operator(rng)
    z, w = generators.sample_z(operator, rng), generators.sample_z(operator, rng)
    t = float(rng.uniform())

    mixed = coupling(t * z + (1 - t) * w)
    expanded = t * coupling(z) + (1 - t) * coupling(w) - t * (1 - t) * coupling(z - w)
    scale = max(1.0, abs(coupling(z)), abs(coupling(w)), abs(coupling(z - w)))
    reports = [SlackReport.evaluate(abs(mixed - expanded) / scale, 0.0, policy, 'i1'),
               estimate_i2(operator, z, w, t, policy)]
    if isinstance(operator, PolygonalOperator) and is_monotone(operator, policy):
        graph_point = operator.sample_graph_point(rng)
        reports.append(estimate_i3(operator, z, graph_point, t, policy))

    failed = [report for report in reports if not report.passed]
    detail = '; '.join(f'{r.label}: lhs={r.lhs} rhs={r.rhs}' for r in failed)
    return _verdict(not failed, operator, detail, slack=_worst(reports), z=z, w=w, t=t)


@suite('r1', 'c(p) > 0 forces sigma = +inf; c(p) = 0 forces sigma >= 0; sigma < 0 forces c(p) < 0')
def run_r1(rng, policy):
    operator = generators.ni_operator(rng)
    z = _finite_gap_point(operator, rng, policy)
    if z is None:
        return InstanceOutcome(INDETERMINATE, operator=operator, detail='no point of dom phi sampled')
    p = generators.sample_p(operator, rng)
    violation = r1_implications(operator, z, p, policy)
    return _verdict(violation is None, operator, violation or '', z=z, p=p)


def _proposition_witness(rng, policy):
    operator = generators.check_family(generators.monotone_operator(rng), policy)
    z = _gap_above(operator, rng, policy)
    if z is None:
        return InstanceOutcome(INDETERMINATE, operator=operator, detail='no point of [phi > c] sampled')
    w = negative_coupling_witness(operator, z, policy)
    margin = -coupling(z - w) - policy.tol_exact
    ok = margin > 0 and tplus_contains(operator, w, policy)
    return _verdict(ok, operator, f'c(z - w) = {coupling(z - w):.3e}',
                    slack=ExtendedReal.finite(margin), z=z, w=w)


def _proposition_boundary(rng, policy):
    operator = generators.check_family(generators.monotone_operator(rng), policy)
    resampled = 0
    for attempt in range(5):
        z = _gap_above(operator, rng, policy)
        if z is None:
            break
        u = negative_coupling_witness(operator, z, policy)
        try:
            result = boundary_point(operator, z, u, policy)
        except DomainExitError:
            logger.warning(f"Boundary segment left dom phi, re-sampling (attempt {attempt + 1})")
            resampled += 1
            continue
        residual = abs(float(gap(operator, result.w, policy)))
        expected = result.t ** 2 * coupling(z - u)
        ok = (residual <= policy.tol_iter and coupling(z - result.w) < 0
              and abs(coupling(z - result.w) - expected) <= policy.tol_iter * max(1.0, abs(expected)))
        outcome = _verdict(ok, operator, f'|gap(w)| = {residual:.3e}, s = {result.t:.6g}',
                           slack=ExtendedReal.finite(policy.tol_iter - residual), z=z, u=u)
        return replace(outcome, resampled=resampled)
    return InstanceOutcome(INDETERMINATE, operator=operator, detail='no boundary instance inside dom phi',
                           resampled=resampled)


def _proposition_segment(rng, policy):
    n = int(rng.integers(1, 4))
    operator = generators.gen_point_cloud_monotone(n, int(rng.integers(1, 6)), int(rng.integers(2 ** 32)))
    found = ni_falsify(operator, SamplerConfig(count=100, seed=int(rng.integers(2 ** 32))), policy)
    if found is None:
        return InstanceOutcome(INDETERMINATE, operator=operator, detail='no point of [phi < c] sampled')
    t = float(rng.uniform(0.05, 0.95))
    w = segment_probe(operator, found.z, t, policy)
    value = gap(operator, t * found.z + (1 - t) * w, policy)
    return _verdict(value < -policy.tol_exact, operator, f'segment gap {value}',
                    slack=-value - policy.tol_exact, z=found.z, w=w, t=t)


@suite('prop-i-ii-iii', 'constructive witnesses: negative coupling, boundary point, segment into [phi < c]')
def run_propositions(rng, policy):
    branch = int(rng.integers(3))
    return (_proposition_witness, _proposition_boundary, _proposition_segment)[branch](rng, policy)


@suite('argmin-sigma', 'sigma_A >= 0 exactly when 0 lies in conv A')
def run_argmin_sigma(rng, policy):
    n = int(rng.integers(1, 5))
    count = int(rng.integers(1, 7))
    points = rng.normal(size=(count, n)) + rng.normal(scale=rng.uniform(0.0, 2.0), size=n)
    rays = rng.normal(size=(int(rng.integers(0, 3)), n))
    ok = lemma_argmin_sigma_check(points, rays if rays.shape[0] else (), policy, rng)
    return _verdict(ok, detail='support sign and membership disagree',
                    points=points.tolist(), rays=rays.tolist())


@suite('m8-projections', 'on NI operators, z in dom phi has x in conv D(T) and x* in conv R(T)')
def run_m8_projections(rng, policy):
    operator = generators.ni_operator(rng)
    z = _finite_gap_point(operator, rng, policy)
    if z is None:
        return InstanceOutcome(INDETERMINATE, operator=operator, detail='no point of dom phi sampled')
    in_domain, in_range = projection_inclusion(operator, z, policy)
    return _verdict(in_domain and in_range, operator, f'x in conv D: {in_domain}, x* in conv R: {in_range}', z=z)


@suite('eq3-eq4', 'sampled one-sided checks of D(T+) against the projection of dom phi')
def run_eq3_eq4(rng, policy):
    """Finite T: x of sampled T+ points lies in the hull of a dense dom phi sample.

    Maximal T (T+ = T): x of a dom phi point lies in conv D(T).
    """
    operator = generators.check_family(generators.monotone_operator(rng), policy)
    n = operator.dimension
    problems = []
    slacks = []

    finite = isinstance(operator, PolygonalOperator) and all(piece.kind == 'point' for piece in operator.pieces)
    if finite:
        related = [z for z in (generators.sample_z(operator, rng) for _ in range(30))
                   if tplus_contains(operator, z, policy)][:5]
        if related:
            radius = 1.0 + 2.0 * max(float(np.max(np.abs(z.x))) for z in related)
            sample = [PairedPoint(rng.uniform(-radius, radius, n), rng.uniform(-radius, radius, n))
                      for _ in range(64 * n)]
            for z in related:
                witness = tplus_domain_inclusion(operator, z, sample, policy)
                slacks.append(policy.tol_iter - witness.distance)
                if not witness.in_hull:
                    problems.append(f'x = {z.x.tolist()} of a T+ point lies {witness.distance:.3e} '
                                    f'outside the dom phi sample hull')

    maximal = _is_maximal_family(operator) or (
        isinstance(operator, PolygonalOperator) and any(piece.kind in ('ray', 'line') for piece in operator.pieces)
    )
    if maximal:
        z = _finite_gap_point(operator, rng, policy)
        if z is not None:
            distance = project(domain_hull(operator), z.x, policy=policy).distance
            slacks.append(policy.tol_iter - distance)
            if distance > policy.tol_iter:
                problems.append(f'x = {z.x.tolist()} of a dom phi point lies outside conv D(T)')
    if not slacks:
        return InstanceOutcome(INDETERMINATE, operator=operator, detail='nothing sampled in T+ or dom phi')
    return _verdict(not problems, operator, '; '.join(problems), slack=extended_min(slacks))


@suite('graph-in-phi-le-c', 'monotone graphs sit in [phi <= c]; maximal ones in [phi = c]')
def run_graph_in_phi_le_c(rng, policy):
    seed = int(rng.integers(2 ** 32))
    if rng.uniform() < 0.5:
        operator = generators.check_family(
            generators.gen_point_cloud_monotone(int(rng.integers(1, 4)), int(rng.integers(1, 7)), seed), policy)
        maximal = False
    else:
        builders = (
            lambda: generators.gen_maximal_1d(seed),
            lambda: generators.gen_linear_monotone(int(rng.integers(1, 5)), seed),
            generators.identity_line,
            generators.cubic,
        )
        operator = builders[int(rng.integers(len(builders)))]()
        maximal = True
    w = operator.sample_graph_point(rng)
    value = gap(operator, w, policy)
    ok = value <= policy.tol_slack and (not maximal or value >= -policy.tol_slack)
    return _verdict(ok, operator, f'gap on graph {value}', slack=-abs(float(value)) if maximal else -value, w=w)


@suite('cross', 'the union of the axes has phi = indicator of the origin and D(T) outside Pr_X dom phi')
def run_cross(rng, policy):
    operator = generators.cross_operator()
    problems = []
    if fitzpatrick(operator, PairedPoint.zeros(1), policy) != 0.0:
        problems.append('phi(0, 0) != 0')
    z = PairedPoint(rng.normal(size=1), rng.normal(size=1))
    if not fitzpatrick(operator, z, policy).is_plus_inf:
        problems.append(f'phi finite at {z!r}')
    # x in D(T) = R but (x, x*) lies outside dom phi for every x*
    x = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 3.0))
    if not fitzpatrick(operator, PairedPoint([x], rng.normal(size=1)), policy).is_plus_inf:
        problems.append(f'x = {x} lies in Pr_X dom phi')
    return _verdict(not problems, operator, '; '.join(problems), z=z)


@suite('tplus-ni', 'inner approximation of T+ for monotone T never shows a negative gap (inconclusive otherwise)')
def run_tplus_ni(rng, policy):
    operator = generators.check_family(
        generators.gen_point_cloud_monotone(int(rng.integers(1, 3)), int(rng.integers(1, 5)), int(rng.integers(2 ** 32))),
        policy)
    inner = [piece.base for piece in operator.pieces]
    for _ in range(40):
        z = generators.sample_z(operator, rng)
        if tplus_contains(operator, z, policy):
            inner.append(z)
        if len(inner) >= len(operator) + 6:
            break
    approximation = PolygonalOperator.from_points(inner)
    z = generators.sample_z(approximation, rng)
    value = gap(approximation, z, policy)
    if value < -policy.tol_slack:
        return InstanceOutcome(INDETERMINATE, value, approximation, _jsonable({'z': z}),
                               'inner approximation too coarse')
    return _verdict(True, approximation, slack=value, z=z)


@suite('conjugate', 'fast = brute conjugate, biconjugate below f and idempotent, Fenchel-Young')
def run_conjugate(rng, policy):
    if rng.uniform() < 0.8:
        coords = np.unique(rng.uniform(-3, 3, size=int(rng.integers(1, 257))))
        shape = (coords.size,)
        axes = (coords,)
    else:
        axes = tuple(np.unique(rng.uniform(-2, 2, size=int(rng.integers(1, 17)))) for _ in range(2))
        shape = tuple(axis.size for axis in axes)
    values = rng.normal(size=shape) + rng.uniform(0, 1) * sum(
        np.meshgrid(*[axis ** 2 for axis in axes], indexing='ij'))
    values[rng.uniform(size=shape) < 0.2] = np.inf
    values.flat[int(rng.integers(values.size))] = 0.0
    f = GridFunction(axes, values)

    dual = default_dual_coords(f)
    fast, brute = fast_conjugate(f, dual), brute_conjugate(f, dual)
    problems = []
    if not np.allclose(fast.values, brute.values, rtol=1e-12, atol=1e-12):
        problems.append('fast and brute conjugates differ')
    once = biconjugate(f, dual)
    if np.any(once.values > f.values + policy.tol_exact * np.maximum(1.0, np.abs(once.values))):
        problems.append('biconjugate exceeds f')
    twice = biconjugate(once, dual)
    if not np.allclose(twice.values, once.values, rtol=1e-9, atol=policy.tol_exact):
        problems.append('biconjugate is not idempotent')
    reports = fenchel_young_check(f, brute, sample_index_pairs(f, brute, rng, 64), policy)
    if not all(report.passed for report in reports):
        problems.append('Fenchel-Young fails')
    return _verdict(not problems, None, '; '.join(problems), slack=_worst(reports), shape=list(shape))


def _run_instance(entry, seed, index, policy):
    rng = np.random.default_rng([seed, index])
    try:
        return entry.run(rng, policy)
    except NonConvergenceError as exc:
        logger.warning(f"{entry.name} #{index}: projection did not converge ({exc})")
        return InstanceOutcome(INDETERMINATE, detail=str(exc), nonconverged=True)
    except (IndeterminateFormError, DomainExitError) as exc:
        logger.warning(f"{entry.name} #{index}: indeterminate instance ({exc})")
        return InstanceOutcome(INDETERMINATE, detail=str(exc))
    except (FitzlabError, ValidationError) as exc:
        logger.error(f"{entry.name} #{index}: {exc}", exc_info=True)
        return InstanceOutcome(FAIL, detail=f'{type(exc).__name__}: {exc}')


def run_suite(name, seed=None, count=None, policy=None, workers=None, replay_dir=None):
    """Run `count` instances of a named suite and aggregate them in index order"""
    if name not in SUITES:
        raise PreconditionError(f"Unknown suite {name!r}; known suites: {', '.join(SUITES)}")
    config = settings.FITZLAB
    entry = SUITES[name]
    seed = config['DEFAULT_SEED'] if seed is None else int(seed)
    count = config['DEFAULT_COUNT'] if count is None else int(count)
    workers = workers or config['WORKERS']
    replay_dir = replay_dir or config['REPLAY_DIR']
    policy = policy or TolerancePolicy.from_settings()

    logger.info(f"Running suite {name} (seed {seed}, {count} instances, {workers} workers)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(lambda index: _run_instance(entry, seed, index, policy), range(count)))

    failures = []
    for index, outcome in enumerate(outcomes):
        if outcome.status != FAIL:
            continue
        failure = {'index': index, 'detail': outcome.detail,
                   'slack': str(outcome.slack) if outcome.slack is not None else None, 'inputs': outcome.inputs}
        if replay_dir and outcome.operator is not None:
            failure['replay'] = str(write_replay(replay_dir, name, index, outcome.operator, outcome.inputs,
                                                 outcome.detail))
        failures.append(failure)

    scored = [o.slack for o in outcomes if o.status != INDETERMINATE and o.slack is not None]
    report = SuiteReport(
        suite=name,
        seed=seed,
        count=count,
        passed=sum(o.status == PASS for o in outcomes),
        failed=sum(o.status == FAIL for o in outcomes),
        indeterminate=sum(o.status == INDETERMINATE for o in outcomes),
        worst_slack=extended_min(scored) if scored else None,
        nonconverged=sum(o.nonconverged for o in outcomes),
        resampled=sum(o.resampled for o in outcomes),
        failures=tuple(failures),
    )
    log = logger.info if report.ok else logger.error
    log(f"Suite {name}: {report.passed} passed, {report.failed} failed, {report.indeterminate} indeterminate")
    return report
