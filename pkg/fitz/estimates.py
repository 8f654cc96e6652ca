# fitz/estimates.py
"""Evaluators for the gap estimates.

Every evaluator returns a SlackReport whose slack is rhs - lhs, so an
inequality instance holds exactly when the slack is nonnegative up to
tol_slack.
"""
import logging
import math

import numpy as np
from django.conf import settings

from core.exceptions import NIViolationError, PreconditionError, R1ViolationError
from core.models import MINUS_INF, PLUS_INF, ExtendedReal, PairedPoint, TolerancePolicy
from core.utils import coupling
from hull.models import HullGenerators
from hull.utils import membership, project, separating_direction
from opmodel.utils import domain_affine_hull, domain_hull, range_affine_hull, range_hull

from .models import InclusionWitness, ShiftWitness, SlackReport
from .utils import fitzpatrick, gap, support_shifted, tplus_contains

logger = logging.getLogger(__name__)

POSITIVE_COUPLING = 'positive-coupling'
NULL_COUPLING = 'null-coupling'
NEGATIVE_SUPPORT = 'negative-support'


def _policy(policy):
    return policy or TolerancePolicy.from_settings()


def estimate_main(operator, z, p, t, policy=None):
    """gap(z + tp) <= gap(z) - t^2 c(p) + t sigma_{T-z}(p), valid for every operator"""
    policy = _policy(policy)
    t = float(t)
    if t < 0:
        raise PreconditionError(f"Step t must be nonnegative, got {t}")
    lhs = gap(operator, z + t * p, policy)
    rhs = (gap(operator, z, policy)
           + ExtendedReal.finite(-t * t * coupling(p))
           + t * support_shifted(operator, z, p, policy))
    return SlackReport.evaluate(lhs, rhs, policy, 'main')


def estimate_m2(operator, z, p, t, policy=None):
    """gap(z) >= t^2 c(p) - t sigma_{T-z}(p) on NI operators"""
    policy = _policy(policy)
    t = float(t)
    if t < 0:
        raise PreconditionError(f"Step t must be nonnegative, got {t}")
    lhs = ExtendedReal.finite(t * t * coupling(p)) - t * support_shifted(operator, z, p, policy)
    return SlackReport.evaluate(lhs, gap(operator, z, policy), policy, 'm2')


def default_m3_candidates(n, rng, count=None):
    """Directions with negative coupling: (s e_i, -s e_j) pairs first, then random draws"""
    count = count or settings.FITZLAB['M3_DIRECTIONS']
    candidates = []
    identity = np.eye(n)
    for i in range(n):
        for j in range(n):
            for s in (1.0, -1.0):
                candidates.append(PairedPoint(s * identity[i], -s * identity[j]))
    while len(candidates) < count:
        candidates.append(PairedPoint(rng.normal(size=n), rng.normal(size=n)))
    return candidates[:max(count, 1)]


def estimate_m3(operator, z, candidates, policy=None):
    """gap(z) >= sup over candidates with sigma < 0 of -sigma^2 / (4 c(p))"""
    policy = _policy(policy)
    g = gap(operator, z, policy)
    if g.is_plus_inf:
        return SlackReport.evaluate(MINUS_INF, g, policy, 'm3')
    best = MINUS_INF
    for p in candidates:
        sigma = support_shifted(operator, z, p, policy)
        if not sigma < -policy.tol_exact:
            continue
        c = coupling(p)
        if c >= -policy.tol_exact:
            raise R1ViolationError(f"sigma = {sigma} < 0 but c(p) = {c} at p = {p!r}")
        value = ExtendedReal.finite(-float(sigma) ** 2 / (4.0 * c))
        if value > best:
            best = value
    return SlackReport.evaluate(best, g, policy, 'm3')


def estimate_m4(operator, z, p, policy=None):
    """sigma_{T-z}(p) + 2 sqrt(gap(z)) sqrt(|c(p)|) >= 0 on NI operators"""
    policy = _policy(policy)
    g = gap(operator, z, policy)
    sigma = support_shifted(operator, z, p, policy)
    if g.is_plus_inf:
        return SlackReport.evaluate(-sigma, PLUS_INF, policy, 'm4')
    if g < -policy.tol_slack:
        raise NIViolationError(f"gap(z) = {g} < 0 at z = {z!r}")
    rhs = 2.0 * math.sqrt(max(float(g), 0.0)) * math.sqrt(abs(coupling(p)))
    return SlackReport.evaluate(-sigma, rhs, policy, 'm4')


def estimate_m7(operator, z, hull, norm=None, policy=None):
    """gap(z) >= 1/2 dist_delta^2(z, conv Graph T) on NI operators"""
    policy = _policy(policy)
    g = gap(operator, z, policy)
    if g.is_plus_inf:
        return SlackReport.evaluate(MINUS_INF, g, policy, 'm7')
    distance = project(hull, z.as_vector(), norm, policy).distance
    return SlackReport.evaluate(0.5 * distance ** 2, g, policy, 'm7')


def r1_implications(operator, z, p, policy=None):
    """Check the three sign implications between c(p) and sigma_{T-z}(p).

    They hold for z in dom phi_T of an NI operator. Returns None when all
    hold, otherwise the name of the first violated implication.
    """
    policy = _policy(policy)
    c = coupling(p)
    sigma = support_shifted(operator, z, p, policy)
    if c > policy.tol_exact and not sigma.is_plus_inf:
        return POSITIVE_COUPLING
    if abs(c) <= policy.tol_exact and sigma < -policy.tol_exact:
        return NULL_COUPLING
    if sigma < -policy.tol_exact and c >= -policy.tol_exact:
        return NEGATIVE_SUPPORT
    return None


def _side_parts(z, side):
    return (z.x, z.xstar) if side == 'x' else (z.xstar, z.x)


def _shifted(z, side, delta):
    """z moved by delta in the coordinate opposite to `side`"""
    if side == 'x':
        return PairedPoint(z.x, z.xstar + delta)
    return PairedPoint(z.x + delta, z.xstar)


def m9_inclusion(operator, z, side='x', policy=None, max_doublings=60):
    """Projection inclusion on one side of Z for z in dom phi_T.

    Either the side's coordinate lies in conv D(T) (conv R(T) for side
    'xstar'), or walking along p = (0, u*) (p = (u, 0)) with u* separating
    that coordinate from the hull reaches a point of [phi_T <= c].
    """
    policy = _policy(policy)
    own, _ = _side_parts(z, side)
    hull = domain_hull(operator) if side == 'x' else range_hull(operator)
    result = project(hull, own, policy=policy)
    if result.distance <= policy.tol_iter:
        return InclusionWitness(side, True, result.distance)

    g = gap(operator, z, policy)
    if g.is_plus_inf:
        raise PreconditionError("z must lie in dom phi_T")

    direction = separating_direction(hull, own, policy=policy)
    zero = np.zeros_like(direction)
    p = PairedPoint(zero, direction) if side == 'x' else PairedPoint(direction, zero)
    sigma = support_shifted(operator, z, p, policy)
    step = max(float(g), 0.0) / max(-float(sigma), policy.tol_exact) if sigma.is_finite else 1.0
    for _ in range(max_doublings):
        candidate = z + step * p
        value = gap(operator, candidate, policy)
        if value <= policy.tol_slack:
            return InclusionWitness(side, False, result.distance, candidate, value)
        step = 2.0 * step if step > 0 else 1.0
    logger.warning(f"No point of [phi <= c] found along the separating direction from {z!r}")
    return InclusionWitness(side, False, result.distance)


def projection_inclusion(operator, z, policy=None):
    """For NI operators and z in dom phi_T: x in conv D(T) and x* in conv R(T)"""
    policy = _policy(policy)
    return (membership(domain_hull(operator), z.x, policy=policy),
            membership(range_hull(operator), z.xstar, policy=policy))


def tplus_domain_inclusion(operator, z, sample, policy=None):
    """x of a point of T+ against the hull of the x parts of a dom phi_T sample.

    Sample points outside dom phi_T are dropped; the witness holds when x
    lies within tol_iter of the hull.
    """
    policy = _policy(policy)
    if not tplus_contains(operator, z, policy):
        raise PreconditionError(f"z = {z!r} is not monotonically related to Graph T")
    domain = [w.x for w in sample if gap(operator, w, policy).is_finite]
    if not domain:
        raise PreconditionError("No sample point lies in dom phi_T")
    distance = project(HullGenerators(domain), z.x, policy=policy).distance
    return InclusionWitness('x', distance <= policy.tol_iter, distance)


def affine_shift_witness(operator, z, side='x', policy=None):
    """Affine-hull inclusion on one side of Z for z in dom phi_T.

    With F = aff D(T) (aff R(T) for side 'xstar'), a0 in F and u* the
    component of x - a0 orthogonal to F, gap is affine along (0, u*) with
    slope -<x - a0, u*>, so the shift by gamma = gap(z) / <x - a0, u*>
    lands on [phi_T = c].
    """
    policy = _policy(policy)
    own, _ = _side_parts(z, side)
    hull = domain_affine_hull(operator, policy) if side == 'x' else range_affine_hull(operator, policy)
    if hull.contains(own, policy.tol_iter):
        return ShiftWitness(side, True)

    g = gap(operator, z, policy)
    if g.is_plus_inf:
        raise PreconditionError("z must lie in dom phi_T")
    normal = hull.normal_component(own)
    gamma = float(g) / float(normal @ normal)
    point = _shifted(z, side, gamma * normal)
    residual = gap(operator, point, policy)
    return ShiftWitness(side, False, gamma, point, float(residual))


def estimate_i2(operator, z, w, t, policy=None):
    """gap(tz + (1-t)w) <= t gap(z) + (1-t) gap(w) + t(1-t) c(z - w)"""
    policy = _policy(policy)
    t = float(t)
    lhs = gap(operator, t * z + (1 - t) * w, policy)
    rhs = (t * gap(operator, z, policy) + (1 - t) * gap(operator, w, policy)
           + ExtendedReal.finite(t * (1 - t) * coupling(z - w)))
    return SlackReport.evaluate(lhs, rhs, policy, 'i2')


def estimate_convexity(operator, z, w, t, policy=None):
    """phi(tz + (1-t)w) <= t phi(z) + (1-t) phi(w)"""
    policy = _policy(policy)
    t = float(t)
    lhs = fitzpatrick(operator, t * z + (1 - t) * w, policy)
    rhs = t * fitzpatrick(operator, z, policy) + (1 - t) * fitzpatrick(operator, w, policy)
    return SlackReport.evaluate(lhs, rhs, policy, 'convexity')


def estimate_i3(operator, z, w, t, policy=None):
    """gap(tz + (1-t)w) <= t[gap(z) + (1-t) c(z - w)] for w in [phi_T <= c]"""
    policy = _policy(policy)
    t = float(t)
    if gap(operator, w, policy) > policy.tol_slack:
        raise PreconditionError(f"w = {w!r} must lie in [phi_T <= c]")
    lhs = gap(operator, t * z + (1 - t) * w, policy)
    rhs = t * (gap(operator, z, policy) + ExtendedReal.finite((1 - t) * coupling(z - w)))
    return SlackReport.evaluate(lhs, rhs, policy, 'i3')
