# harness/generators.py
"""Seeded operator families and the point/direction samplers the suites draw from.

NI status belongs to the family: linear monotone maps, maximal 1-D
staircases, the identity line, the cross operator and the cubic are NI;
point clouds and random polygonal graphs are not assumed to be.
"""
import logging

import numpy as np
from django.core.exceptions import ValidationError

from core.exceptions import PreconditionError
from core.models import PairedPoint
from core.utils import coupling
from opmodel.models import (
    CubicOperator,
    LinearMonotoneOperator,
    LinePiece,
    PointPiece,
    PolygonalOperator,
    RayPiece,
    SegmentPiece,
)
from opmodel.utils import is_monotone

logger = logging.getLogger(__name__)


def _pp(x, xstar):
    return PairedPoint(np.atleast_1d(x), np.atleast_1d(xstar))


def gen_linear_monotone(n, seed):
    """A = Q diag(lambda) Q' + K with lambda >= 0 and K skew; b random"""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eigenvalues = rng.uniform(0.0, 2.0, size=n)
    # a singular symmetric part now and then
    if n > 1 and rng.uniform() < 0.3:
        eigenvalues[rng.integers(n)] = 0.0
    m = rng.normal(size=(n, n))
    A = (q * eigenvalues) @ q.T + 0.5 * (m - m.T)
    return LinearMonotoneOperator(A, rng.normal(size=n))


def gen_maximal_1d(seed, steps=None):
    """Graph of the subdifferential of a convex piecewise-linear function on R.

    Breakpoints x_0 < ... < x_{k-1} carry vertical segments between the
    increasing levels y_0 < ... < y_k; horizontal segments join them. Each
    end is either a horizontal ray (x -> +-inf) or a vertical ray (a domain
    boundary).
    """
    rng = np.random.default_rng(seed)
    k = steps or int(rng.integers(1, 5))
    xs = np.cumsum(rng.uniform(0.3, 1.5, size=k)) - rng.uniform(0.0, 2.0)
    ys = np.cumsum(rng.uniform(0.3, 1.5, size=k + 1)) - rng.uniform(0.0, 2.0)

    pieces = []
    if rng.uniform() < 0.75:
        pieces.append(RayPiece(_pp(xs[0], ys[0]), _pp(-1.0, 0.0)))
    else:
        pieces.append(RayPiece(_pp(xs[0], ys[0]), _pp(0.0, -1.0)))
    for i in range(k):
        pieces.append(SegmentPiece(_pp(xs[i], ys[i]), _pp(xs[i], ys[i + 1])))
        if i + 1 < k:
            pieces.append(SegmentPiece(_pp(xs[i], ys[i + 1]), _pp(xs[i + 1], ys[i + 1])))
    if rng.uniform() < 0.75:
        pieces.append(RayPiece(_pp(xs[-1], ys[-1]), _pp(1.0, 0.0)))
    else:
        pieces.append(RayPiece(_pp(xs[-1], ys[-1]), _pp(0.0, 1.0)))
    return PolygonalOperator(tuple(pieces))


def gen_point_cloud_monotone(n, m, seed, forced=(), max_attempts=None):
    """Greedy rejection sampling of up to m points with pairwise c(z_i - z_j) >= 0.

    Candidates are drawn as (x, Sx + noise) with S positive definite so that
    most of them are accepted; forced points are kept first and must already
    be pairwise monotone.
    """
    rng = np.random.default_rng(seed)
    accepted = [PairedPoint(z.x, z.xstar) for z in forced]
    for i, z in enumerate(accepted):
        for w in accepted[:i]:
            if coupling(z - w) < 0:
                raise PreconditionError(f"Forced points {w!r} and {z!r} are not monotonically related")

    root = rng.normal(size=(n, n))
    S = root @ root.T / n + 0.2 * np.eye(n)
    max_attempts = max_attempts or 50 * max(m, 1)
    attempts = 0
    while len(accepted) < m and attempts < max_attempts:
        attempts += 1
        x = rng.normal(scale=1.5, size=n)
        candidate = PairedPoint(x, S @ x + rng.normal(scale=0.3, size=n))
        if all(coupling(candidate - w) >= 0 for w in accepted):
            accepted.append(candidate)
    if len(accepted) < m:
        logger.warning(f"Point cloud stopped at {len(accepted)} of {m} points after {attempts} draws")
    return PolygonalOperator.from_points(accepted)


def gen_polygonal(n, seed, pieces=None):
    """Random pieces of every type; no monotonicity is imposed"""
    rng = np.random.default_rng(seed)
    count = pieces or int(rng.integers(1, 5))

    def draw():
        return PairedPoint(rng.normal(size=n), rng.normal(size=n))

    chosen = []
    for _ in range(count):
        kind = rng.choice(['point', 'segment', 'ray', 'line'], p=[0.3, 0.3, 0.25, 0.15])
        if kind == 'point':
            chosen.append(PointPiece(draw()))
        elif kind == 'segment':
            chosen.append(SegmentPiece(draw(), draw()))
        elif kind == 'ray':
            chosen.append(RayPiece(draw(), draw()))
        else:
            chosen.append(LinePiece(draw(), draw()))
    return PolygonalOperator(tuple(chosen))


def identity_line():
    return PolygonalOperator((LinePiece(_pp(0.0, 0.0), _pp(1.0, 1.0)),))


def cross_operator():
    """Union of the two coordinate axes of R^2"""
    return PolygonalOperator((LinePiece(_pp(0.0, 0.0), _pp(1.0, 0.0)), LinePiece(_pp(0.0, 0.0), _pp(0.0, 1.0))))


def singleton(z):
    return PolygonalOperator.from_points([z])


def cubic():
    return CubicOperator()


def ni_operator(rng):
    """One operator from the NI families"""
    seed = int(rng.integers(2 ** 32))
    choice = rng.choice(['linear', 'maximal', 'identity', 'cross', 'cubic'], p=[0.4, 0.35, 0.1, 0.05, 0.1])
    if choice == 'linear':
        return gen_linear_monotone(int(rng.integers(1, 6)), seed)
    if choice == 'maximal':
        return gen_maximal_1d(seed)
    if choice == 'identity':
        return identity_line()
    if choice == 'cross':
        return cross_operator()
    return cubic()


def monotone_operator(rng):
    """One operator from the monotone families, not necessarily maximal"""
    seed = int(rng.integers(2 ** 32))
    choice = rng.choice(['cloud', 'maximal', 'linear'], p=[0.4, 0.35, 0.25])
    if choice == 'cloud':
        n = int(rng.integers(1, 4))
        return gen_point_cloud_monotone(n, int(rng.integers(1, 7)), seed)
    if choice == 'maximal':
        return gen_maximal_1d(seed)
    return gen_linear_monotone(int(rng.integers(1, 4)), seed)


def any_operator(rng):
    """NI, monotone, random polygonal or singleton operators"""
    branch = rng.choice(['ni', 'monotone', 'polygonal', 'singleton'], p=[0.3, 0.2, 0.35, 0.15])
    if branch == 'ni':
        return ni_operator(rng)
    if branch == 'monotone':
        return monotone_operator(rng)
    n = int(rng.integers(1, 4))
    if branch == 'polygonal':
        return gen_polygonal(n, int(rng.integers(2 ** 32)))
    return singleton(PairedPoint(rng.normal(size=n), rng.normal(size=n)))


def check_family(operator, policy=None):
    """Generated monotone families must pass the monotonicity check before use"""
    if isinstance(operator, PolygonalOperator) and not is_monotone(operator, policy):
        raise ValidationError({'pieces': 'Generated operator is not monotone'})
    return operator


def sample_z(operator, rng):
    """Standard normal or a perturbed graph point"""
    n = operator.dimension
    if rng.uniform() < 0.5:
        return PairedPoint(rng.normal(size=n), rng.normal(size=n))
    jitter = PairedPoint(rng.normal(scale=0.5, size=n), rng.normal(scale=0.5, size=n))
    return operator.sample_graph_point(rng) + jitter


def null_coupling_direction(n, rng):
    """(u, u*) with <u, u*> = 0"""
    u = rng.normal(size=n)
    v = rng.normal(size=n)
    return PairedPoint(u, v - (u @ v) / (u @ u) * u)


def support_direction(operator, rng):
    """A direction p with sigma_{T-z}(p) finite for every z.

    Linear operators use p = (u, -A'u). Polygonal operators project a random
    p onto {p . d = 0} for every unbounded direction d. The cubic only
    admits p = 0.
    """
    n = operator.dimension
    if isinstance(operator, LinearMonotoneOperator):
        u = rng.normal(size=n)
        return PairedPoint(u, -operator.A.T @ u)
    if isinstance(operator, CubicOperator):
        return PairedPoint.zeros(n)

    p = np.concatenate([rng.normal(size=n), rng.normal(size=n)])
    # gradient of p . d with respect to p is (d*, d)
    constraints = [np.concatenate([piece.direction.xstar, piece.direction.x])
                   for piece in operator.pieces if piece.kind in ('ray', 'line')]
    if constraints:
        M = np.array(constraints)
        p = p - np.linalg.pinv(M) @ (M @ p)
    return PairedPoint.from_vector(p)


def sample_p(operator, rng):
    """Mixture of normal, coupling-null, (s u, -s u) and support-finite directions"""
    n = operator.dimension
    branch = rng.choice(4)
    if branch == 0:
        return PairedPoint(rng.normal(size=n), rng.normal(size=n))
    if branch == 1:
        return null_coupling_direction(n, rng)
    if branch == 2:
        u = rng.normal(size=n)
        return PairedPoint(u, -rng.uniform(0.1, 2.0) * u)
    return support_direction(operator, rng)
