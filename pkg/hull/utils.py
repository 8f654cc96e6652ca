# hull/utils.py
import logging

import numpy as np
from django.conf import settings

from core.exceptions import DimensionMismatchError, NonConvergenceError, PreconditionError, SearchFailureError
from core.models import PLUS_INF, ExtendedReal, TolerancePolicy

from .models import HullGenerators, ProjectionResult

logger = logging.getLogger(__name__)


def _policy(policy):
    return policy or TolerancePolicy.from_settings()


def _coordinate_scale(hull, norm):
    if norm is None:
        return np.ones(hull.dimension)
    if hull.dimension % 2:
        raise DimensionMismatchError(
            f"A weighted pair norm needs an even dimension, hull has dimension {hull.dimension}"
        )
    return norm.coordinate_scale(hull.dimension // 2)


def _solve_passive(gram, linear, simplex_row, passive):
    """min 1/2 y'Gy - linear'y subject to simplex_row . y = 1 on the passive columns"""
    idx = np.array(sorted(passive))
    size = idx.size
    system = np.zeros((size + 1, size + 1))
    system[:size, :size] = gram[np.ix_(idx, idx)]
    system[:size, size] = simplex_row[idx]
    system[size, :size] = simplex_row[idx]
    rhs = np.concatenate([linear[idx], [1.0]])
    solution = np.linalg.lstsq(system, rhs, rcond=None)[0]
    return idx, solution[:size]


def project(hull, q, norm=None, policy=None, max_iter=None):
    """Min-norm point of conv(points) + cone(rays) from q under the weighted pair norm.

    Active-set method over the generator weights: the simplex constraint on
    point weights is kept as an equality in every passive-set solve, a
    generator enters when its reduced cost is negative and leaves when the
    step towards the passive solution drives its weight to zero.
    """
    policy = _policy(policy)
    max_iter = max_iter or settings.FITZLAB['PROJECTION_MAX_ITER']
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != hull.dimension:
        raise DimensionMismatchError(f"Query has dimension {q.size}, hull has dimension {hull.dimension}")

    scale_vector = _coordinate_scale(hull, norm)
    generators = np.vstack([hull.points, hull.rays]) * scale_vector
    target = q * scale_vector
    point_count = hull.points.shape[0]
    simplex_row = np.concatenate([np.ones(point_count), np.zeros(hull.rays.shape[0])])

    gram = generators @ generators.T
    linear = generators @ target
    scale = max(1.0, float(np.linalg.norm(target)), float(np.linalg.norm(generators, axis=1).max()))
    threshold = (policy.tol_iter * scale) ** 2

    weights = np.zeros(generators.shape[0])
    start = int(np.argmin(np.linalg.norm(generators[:point_count] - target, axis=1)))
    weights[start] = 1.0
    passive = {start}
    blocked = set()

    def objective(w):
        residual = w @ generators - target
        return 0.5 * float(residual @ residual)

    def reduced_costs(w):
        gradient = gram @ w - linear
        points_in = [i for i in passive if i < point_count]
        multiplier = -float(np.mean(gradient[points_in])) if points_in else 0.0
        return gradient + multiplier * simplex_row

    iterations = 0
    kkt_residual = np.inf
    while iterations < max_iter:
        iterations += 1
        costs = reduced_costs(weights)
        outside = [i for i in range(generators.shape[0]) if i not in passive]
        kkt_residual = max(0.0, -min((costs[i] for i in outside), default=0.0)) / scale ** 2
        candidates = [i for i in outside if i not in blocked and costs[i] < -threshold]
        if not candidates:
            break

        entering = min(candidates, key=lambda i: costs[i])
        before = objective(weights)
        passive.add(entering)

        while True:
            idx, solution = _solve_passive(gram, linear, simplex_row, passive)
            if np.all(solution > 0.0):
                weights = np.zeros_like(weights)
                weights[idx] = solution
                break
            current = weights[idx]
            shrinking = solution <= 0.0
            gaps = current[shrinking] - solution[shrinking]
            ratios = np.where(gaps > 0.0, current[shrinking] / np.where(gaps > 0.0, gaps, 1.0), 0.0)
            step = float(np.min(ratios))
            weights[idx] = current + step * (solution - current)
            leaving = {int(i) for i, w in zip(idx, weights[idx]) if w <= 1e-15}
            weights[list(leaving)] = 0.0
            passive -= leaving
            if not passive:
                raise SearchFailureError("Projection lost every active generator")

        if objective(weights) < before - 1e-15 * scale ** 2:
            blocked.clear()
        elif entering not in passive:
            blocked.add(entering)

    if kkt_residual > policy.tol_iter:
        raise NonConvergenceError(
            f"Projection stopped after {iterations} iterations with KKT residual {kkt_residual:.3e}",
            residual=kkt_residual,
            iterations=iterations,
        )

    point_weights = weights[:point_count]
    ray_weights = weights[point_count:]
    point = hull.combine(point_weights, ray_weights)
    distance = float(np.linalg.norm((q - point) * scale_vector))
    logger.debug(f"Projected onto {hull.generator_count} generators in {iterations} iterations, "
                 f"distance {distance:.6g}")
    return ProjectionResult(point, point_weights, ray_weights, distance, kkt_residual, iterations)


def membership(hull, q, norm=None, policy=None):
    policy = _policy(policy)
    return project(hull, q, norm, policy).distance <= policy.tol_iter


def support_function(hull, p, policy=None):
    """sup over conv(points) + cone(rays) of <g, p>"""
    policy = _policy(policy)
    p = np.asarray(p, dtype=float)
    if hull.rays.shape[0] and float(np.max(hull.rays @ p)) > policy.tol_exact:
        return PLUS_INF
    return ExtendedReal.finite(float(np.max(hull.points @ p)))


def separating_direction(hull, q, norm=None, policy=None):
    """Unit-scaled p with sup over the hull of <g - q, p> strictly negative"""
    policy = _policy(policy)
    q = np.asarray(q, dtype=float).reshape(-1)
    result = project(hull, q, norm, policy)
    if result.distance <= policy.tol_iter:
        raise PreconditionError(f"Point lies in the hull (distance {result.distance:.3e})")

    scale_vector = _coordinate_scale(hull, norm)
    residual = (result.point - q) * scale_vector
    direction = -(residual * scale_vector) / float(np.linalg.norm(residual))

    margin = float(np.max((hull.points - q) @ direction))
    ray_margin = float(np.max(hull.rays @ direction)) if hull.rays.shape[0] else 0.0
    if margin >= -policy.tol_exact or ray_margin > policy.tol_exact:
        raise SearchFailureError(
            f"Projection residual does not separate (margin {margin:.3e}, ray margin {ray_margin:.3e})"
        )
    return direction


def lemma_argmin_sigma_check(points, rays=(), policy=None, rng=None, directions=64):
    """Check that sigma_A >= 0 holds exactly when 0 lies in conv A.

    Membership of the origin comes from projection; a negative support value
    comes from the separating direction for non-members and from random
    directions for members.
    """
    policy = _policy(policy)
    hull = HullGenerators(points, rays)
    origin = np.zeros(hull.dimension)
    member = membership(hull, origin, policy=policy)

    if not member:
        direction = separating_direction(hull, origin, policy=policy)
        agree = support_function(hull, direction, policy) < -policy.tol_exact
    else:
        rng = rng or np.random.default_rng(0)
        samples = rng.normal(size=(directions, hull.dimension))
        agree = all(support_function(hull, p, policy) >= -policy.tol_exact for p in samples)

    if not agree:
        logger.warning(f"Support/membership disagreement for {hull.points.shape[0]} points (member={member})")
    return agree
