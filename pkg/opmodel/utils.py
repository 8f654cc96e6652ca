# opmodel/utils.py
import logging

import numpy as np

from core.models import ZERO, PairedPoint, TolerancePolicy
from core.utils import check_same_dimension, coupling, pair_dot
from hull.models import HullGenerators

from .models import (
    AffineHull,
    CubicOperator,
    LinearMonotoneOperator,
    MonotonicityResult,
    PolygonalOperator,
)
from .quadratic import BoxQuadratic, maximize_interval_quadratic, minimize_interval_quadratic

logger = logging.getLogger(__name__)


def _tolerance(policy):
    return (policy or TolerancePolicy.from_settings()).tol_exact


def piece_objective_coefficients(piece, z):
    """Coefficients of g(t) = z . alpha(t) - c(alpha(t)) for alpha(t) = base + t dir"""
    check_same_dimension(piece.base, z)
    base, direction = piece.base, piece.direction
    a2 = -coupling(direction)
    a1 = pair_dot(z, direction) - pair_dot(base, direction)
    a0 = pair_dot(z, base) - coupling(base)
    return a2, a1, a0


def piece_sup_affine_quadratic(piece, z, policy=None):
    """Exact sup over the piece of alpha -> z . alpha - c(alpha)"""
    a2, a1, a0 = piece_objective_coefficients(piece, z)
    value, _ = maximize_interval_quadratic(a2, a1, a0, piece.lower, piece.upper, _tolerance(policy))
    return value


def piece_argmin_coupling(piece, z, policy=None):
    """inf over the piece of c(z - alpha(t)), with the minimizing parameter (None when -inf)"""
    check_same_dimension(piece.base, z)
    offset = z - piece.base
    direction = piece.direction
    a2 = coupling(direction)
    a1 = -pair_dot(offset, direction)
    a0 = coupling(offset)
    return minimize_interval_quadratic(a2, a1, a0, piece.lower, piece.upper, _tolerance(policy))


def piece_inf_coupling(piece, z, policy=None):
    value, _ = piece_argmin_coupling(piece, z, policy)
    return value


def _pair_quadratic(first, second, tol):
    """q(t, s) = c(alpha(t) - beta(s)) as a BoxQuadratic"""
    offset = first.base - second.base
    d, e = first.direction, second.direction
    cross = pair_dot(d, e)
    hessian = [[2.0 * coupling(d), -cross], [-cross, 2.0 * coupling(e)]]
    linear = [pair_dot(offset, d), -pair_dot(offset, e)]
    return BoxQuadratic(
        hessian, linear, coupling(offset),
        lower=[first.lower, second.lower],
        upper=[first.upper, second.upper],
        tol=tol,
    )


def is_monotone(operator, policy=None):
    """Decide c(z - z') >= -tol_exact over all pairs of graph points.

    Linear operators are monotone by their PSD invariant and the cubic curve
    always is; polygonal operators are checked pair of pieces by pair of
    pieces, each pair an exact 2-D box quadratic minimization.
    """
    if isinstance(operator, (LinearMonotoneOperator, CubicOperator)):
        return MonotonicityResult(True, ZERO)

    tol = _tolerance(policy)
    pieces = operator.pieces
    overall, witness = None, None
    for i, first in enumerate(pieces):
        for second in pieces[i:]:
            value, argmin = _pair_quadratic(first, second, tol).minimize()
            if overall is None or value < overall:
                overall = value
                if value < -tol and argmin is not None:
                    witness = (first.at(argmin[0]), second.at(argmin[1]))

    if overall < -tol:
        logger.debug(f"Monotonicity fails with minimum {overall} over {len(pieces)} pieces")
        return MonotonicityResult(False, overall, witness)
    return MonotonicityResult(True, overall)


def _project_generators(points, rays, side):
    """Project paired-point generators onto the primal or dual factor"""
    pick = (lambda z: z.x) if side == 'x' else (lambda z: z.xstar)
    projected_points = [pick(p) for p in points]
    projected_rays = [pick(r) for r in rays if np.any(pick(r) != 0.0)]
    return projected_points, projected_rays


def _factor_hull(operator, side):
    n = operator.dimension
    if isinstance(operator, CubicOperator):
        return HullGenerators([[0.0]], [[1.0], [-1.0]])
    if isinstance(operator, LinearMonotoneOperator):
        identity = np.eye(n)
        if side == 'x':
            return HullGenerators([np.zeros(n)], list(identity) + list(-identity))
        columns = [column for column in operator.A.T if np.linalg.norm(column) > 0.0]
        return HullGenerators([operator.b], columns + [-column for column in columns] or np.zeros((0, n)))

    points, rays = [], []
    for piece in operator.pieces:
        piece_points, piece_rays = piece.generators()
        projected_points, projected_rays = _project_generators(piece_points, piece_rays, side)
        points += projected_points
        rays += projected_rays
    return HullGenerators(points, rays or np.zeros((0, n)))


def domain_hull(operator):
    """Generators of conv D(T)"""
    return _factor_hull(operator, 'x')


def range_hull(operator):
    """Generators of conv R(T)"""
    return _factor_hull(operator, 'xstar')


def graph_hull(operator):
    """Generators of conv Graph T in R^{2n}"""
    n = operator.dimension
    if isinstance(operator, CubicOperator):
        return HullGenerators([[0.0, 0.0]], [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    if isinstance(operator, LinearMonotoneOperator):
        base = PairedPoint(np.zeros(n), operator.b)
        rays = []
        for column in np.eye(n):
            ray = PairedPoint(column, operator.A @ column)
            rays += [ray, -ray]
        return HullGenerators.from_pairs([base], rays)

    points, rays = [], []
    for piece in operator.pieces:
        piece_points, piece_rays = piece.generators()
        points += piece_points
        rays += piece_rays
    return HullGenerators.from_pairs(points, rays)


def graph_points(operator):
    """Finite graph points spanning the same affine hull as Graph T"""
    if isinstance(operator, PolygonalOperator):
        points = []
        for piece in operator.pieces:
            points += [piece.base, piece.base + piece.direction]
        return points
    hull = graph_hull(operator)
    base = PairedPoint.from_vector(hull.points[0])
    return [base] + [base + PairedPoint.from_vector(ray) for ray in hull.rays]


def affine_hull_basis(points, policy=None):
    """Orthonormal basis of aff(points) relative to the first point.

    Differences whose residual against the current basis is within
    tol_exact (scaled by their length) are dropped as dependent.
    """
    tol = _tolerance(policy)
    vectors = [np.asarray(p, dtype=float).reshape(-1) for p in points]
    if not vectors:
        raise ValueError("affine_hull_basis needs at least one point")
    base = vectors[0]
    basis = []
    for vector in vectors[1:]:
        residual = vector - base
        length = float(np.linalg.norm(residual))
        for q in basis:
            residual = residual - (q @ residual) * q
        norm = float(np.linalg.norm(residual))
        if norm > tol * max(1.0, length):
            basis.append(residual / norm)
    basis = np.array(basis) if basis else np.zeros((0, base.size))
    return AffineHull(base, basis)


def domain_affine_hull(operator, policy=None):
    """aff D(T), from the primal halves of spanning graph points"""
    return affine_hull_basis([z.x for z in graph_points(operator)], policy)


def range_affine_hull(operator, policy=None):
    """aff R(T), from the dual halves of spanning graph points"""
    return affine_hull_basis([z.xstar for z in graph_points(operator)], policy)


def minimum_coupling_over_graph(operator, z, policy=None):
    """inf over polygonal pieces of c(z - alpha), with the minimizing piece and parameter"""
    best, best_piece, best_t = None, None, None
    for piece in operator.pieces:
        value, t = piece_argmin_coupling(piece, z, policy)
        if best is None or value < best:
            best, best_piece, best_t = value, piece, t
    return best, best_piece, best_t
