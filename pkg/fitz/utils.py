# fitz/utils.py
import logging

import numpy as np

from core.exceptions import DimensionMismatchError
from core.models import MINUS_INF, PLUS_INF, ExtendedReal, PairedPoint, TolerancePolicy
from core.utils import coupling, extended_max, extended_min, pair_dot
from opmodel.models import CubicOperator, LinearMonotoneOperator, PolygonalOperator
from opmodel.quadratic import maximize_interval_quadratic
from opmodel.utils import minimum_coupling_over_graph, piece_inf_coupling, piece_sup_affine_quadratic

from .models import NIFalsification, SamplerConfig

logger = logging.getLogger(__name__)


def _policy(policy):
    return policy or TolerancePolicy.from_settings()


def _check_dimension(operator, z):
    if operator.dimension != z.dimension:
        raise DimensionMismatchError(
            f"Operator has dimension {operator.dimension}, point has dimension {z.dimension}"
        )


def _linear_residual(operator, z):
    """u = A'x + x* - b, split into its range and null components of the symmetric part"""
    u = operator.A.T @ z.x + z.xstar - operator.b
    coordinates = operator.eigenvectors.T @ u
    null = operator.eigenvalues <= operator.tol_exact
    null_part = operator.eigenvectors[:, null] @ coordinates[null]
    return u, null_part


def _linear_in_range(operator, u, null_part, policy):
    return float(np.linalg.norm(null_part)) <= policy.tol_exact * max(1.0, float(np.linalg.norm(u)))


def _cubic_sup(z):
    """sup over a of x a^3 - a^4 + a x*, with its maximizer"""
    x, xstar = float(z.x[0]), float(z.xstar[0])
    roots = np.roots([-4.0, 3.0 * x, 0.0, xstar])
    candidates = [float(r.real) for r in np.atleast_1d(roots)] or [0.0]

    def objective(a):
        return x * a ** 3 - a ** 4 + a * xstar

    best = max(candidates, key=objective)
    return objective(best), best


def fitzpatrick(operator, z, policy=None):
    """phi_T(z) = sup over alpha in Graph T of z . alpha - c(alpha)"""
    policy = _policy(policy)
    _check_dimension(operator, z)

    if isinstance(operator, PolygonalOperator):
        return extended_max(piece_sup_affine_quadratic(piece, z, policy) for piece in operator.pieces)

    if isinstance(operator, LinearMonotoneOperator):
        u, null_part = _linear_residual(operator, z)
        if not _linear_in_range(operator, u, null_part, policy):
            return PLUS_INF
        return ExtendedReal.finite(float(z.x @ operator.b) + 0.25 * float(u @ operator.pseudo_inverse @ u))

    if isinstance(operator, CubicOperator):
        value, _ = _cubic_sup(z)
        return ExtendedReal.finite(value)

    raise TypeError(f"Unsupported operator {type(operator).__name__}")


def gap(operator, z, policy=None):
    """(phi_T - c)(z); +inf exactly when phi_T(z) is"""
    return fitzpatrick(operator, z, policy) - coupling(z)


def support_shifted(operator, z, p, policy=None):
    """sigma_{T - z}(p) = sup over alpha in Graph T of p . (alpha - z)"""
    policy = _policy(policy)
    _check_dimension(operator, z)
    _check_dimension(operator, p)
    shift = -pair_dot(p, z)

    if isinstance(operator, PolygonalOperator):
        values = []
        for piece in operator.pieces:
            slope = pair_dot(p, piece.direction)
            offset = pair_dot(p, piece.base) + shift
            value, _ = maximize_interval_quadratic(0.0, slope, offset, piece.lower, piece.upper, policy.tol_exact)
            values.append(value)
        return extended_max(values)

    if isinstance(operator, LinearMonotoneOperator):
        direction = p.xstar + operator.A.T @ p.x
        if float(np.linalg.norm(direction)) > policy.tol_exact:
            return PLUS_INF
        return ExtendedReal.finite(float(p.x @ operator.b) + shift)

    if isinstance(operator, CubicOperator):
        return ExtendedReal.finite(0.0) if p.is_zero(policy.tol_exact) else PLUS_INF

    raise TypeError(f"Unsupported operator {type(operator).__name__}")


def monotonically_related_gap(operator, z, policy=None):
    """inf over alpha in Graph T of c(z - alpha)"""
    policy = _policy(policy)
    _check_dimension(operator, z)

    if isinstance(operator, PolygonalOperator):
        return extended_min(piece_inf_coupling(piece, z, policy) for piece in operator.pieces)

    if isinstance(operator, LinearMonotoneOperator):
        u, null_part = _linear_residual(operator, z)
        if not _linear_in_range(operator, u, null_part, policy):
            return MINUS_INF
        value = float(z.x @ (z.xstar - operator.b)) - 0.25 * float(u @ operator.pseudo_inverse @ u)
        return ExtendedReal.finite(value)

    if isinstance(operator, CubicOperator):
        value, _ = _cubic_sup(z)
        return ExtendedReal.finite(coupling(z) - value)

    raise TypeError(f"Unsupported operator {type(operator).__name__}")


def graph_argmin_coupling(operator, z, policy=None):
    """(inf of c(z - alpha), a graph point attaining it); the point is None when the inf is -inf"""
    policy = _policy(policy)
    _check_dimension(operator, z)

    if isinstance(operator, PolygonalOperator):
        value, piece, t = minimum_coupling_over_graph(operator, z, policy)
        return value, (piece.at(t) if t is not None else None)

    if isinstance(operator, LinearMonotoneOperator):
        u, null_part = _linear_residual(operator, z)
        if not _linear_in_range(operator, u, null_part, policy):
            return monotonically_related_gap(operator, z, policy), None
        w = operator.graph_point(0.5 * operator.pseudo_inverse @ u)
        return ExtendedReal.finite(coupling(z - w)), w

    _, a = _cubic_sup(z)
    w = operator.graph_point(a)
    return ExtendedReal.finite(coupling(z - w)), w


def graph_point_below(operator, z, target, policy=None):
    """A graph point alpha with c(z - alpha) < target, walking to infinity when the inf is -inf"""
    policy = _policy(policy)
    _, w = graph_argmin_coupling(operator, z, policy)
    if w is not None:
        return w if coupling(z - w) < target else None

    if isinstance(operator, LinearMonotoneOperator):
        _, null_part = _linear_residual(operator, z)
        path = [operator.graph_point(r * null_part) for r in 2.0 ** np.arange(0, 80)]
    else:
        path = []
        for piece in operator.pieces:
            if piece_inf_coupling(piece, z, policy).is_minus_inf:
                path += [piece.at(sign * r) for r in 2.0 ** np.arange(0, 80) for sign in (1.0, -1.0)
                         if piece.lower <= sign * r <= piece.upper]
    for candidate in path:
        if coupling(z - candidate) < target:
            return candidate
    return None


def tplus_contains(operator, z, policy=None):
    """z is monotonically related to Graph T up to tol_slack"""
    policy = _policy(policy)
    return monotonically_related_gap(operator, z, policy) >= -policy.tol_slack


def sample_point(operator, rng, config):
    """One draw of the ni_falsify mixture"""
    n = operator.dimension
    branch = rng.choice(3, p=np.asarray(config.weights) / np.sum(config.weights))
    if branch == 0:
        return PairedPoint(rng.uniform(-config.box, config.box, n), rng.uniform(-config.box, config.box, n))
    if branch == 1:
        return PairedPoint(rng.normal(scale=config.normal_scale, size=n),
                           rng.normal(scale=config.normal_scale, size=n))
    jitter = PairedPoint(rng.normal(scale=config.graph_jitter, size=n), rng.normal(scale=config.graph_jitter, size=n))
    return operator.sample_graph_point(rng) + jitter


def ni_falsify(operator, config=None, policy=None):
    """Search for z with gap(z) < -tol_slack; None proves nothing"""
    policy = _policy(policy)
    config = config or SamplerConfig()
    rng = np.random.default_rng(config.seed)
    for index in range(config.count):
        z = sample_point(operator, rng, config)
        value = gap(operator, z, policy)
        if value < -policy.tol_slack:
            logger.info(f"NI falsified after {index + 1} samples at {z!r} (gap {value})")
            return NIFalsification(z, float(value))
    return None
