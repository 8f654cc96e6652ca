# fitz/constructions.py
import logging

from core.exceptions import DomainExitError, PreconditionError, SearchFailureError
from core.models import TolerancePolicy
from core.utils import coupling
from opmodel.models import PolygonalOperator
from opmodel.utils import piece_argmin_coupling

from .models import BoundaryPoint
from .utils import gap, graph_point_below, tplus_contains

logger = logging.getLogger(__name__)


def _policy(policy):
    return policy or TolerancePolicy.from_settings()


def negative_coupling_witness(operator, z, policy=None):
    """A point w of [phi_T <= c] with c(z - w) < 0, for z in [phi_T > c] and monotone T.

    The inf over Graph T of c(z - alpha) equals -gap(z) < 0, so a graph
    point near the argmin works and lies in T+ because T is monotone.
    """
    policy = _policy(policy)
    g = gap(operator, z, policy)
    if not g > policy.tol_slack:
        raise PreconditionError(f"gap(z) = {g} must exceed tol_slack")

    w = graph_point_below(operator, z, -policy.tol_exact, policy)
    if w is None:
        raise SearchFailureError(f"No graph point with negative coupling to {z!r}")
    if not tplus_contains(operator, w, policy):
        raise SearchFailureError(f"Graph point {w!r} is not monotonically related to T")
    return w


def boundary_point(operator, z, u, policy=None):
    """Bisect f(t) = gap(z + t(u - z)) on [0, 1] down to a zero of the gap.

    Requires f(0) > tol_slack finite, f(1) <= tol_slack and c(z - u) < 0.
    The returned w satisfies c(z - w) = s^2 c(z - u).
    """
    policy = _policy(policy)
    start = gap(operator, z, policy)
    if not (start.is_finite and start > policy.tol_slack):
        raise PreconditionError(f"gap(z) = {start} must be finite and exceed tol_slack")
    end = gap(operator, u, policy)
    if end > policy.tol_slack:
        raise PreconditionError(f"gap(u) = {end} must not exceed tol_slack")
    if not coupling(z - u) < -policy.tol_exact:
        raise PreconditionError(f"c(z - u) = {coupling(z - u)} must be negative")

    direction = u - z

    def f(t):
        value = gap(operator, z + t * direction, policy)
        if not value.is_finite:
            raise DomainExitError(f"Segment leaves dom phi_T at t = {t}")
        return float(value)

    if abs(float(end)) <= policy.tol_iter:
        return BoundaryPoint(u, 1.0, abs(float(end)))

    lo, hi = 0.0, 1.0
    steps = 0
    while hi - lo > policy.bisect_width:
        steps += 1
        mid = 0.5 * (lo + hi)
        value = f(mid)
        if abs(value) <= policy.tol_iter:
            lo = hi = mid
            break
        if value > 0:
            lo = mid
        else:
            hi = mid

    residual = abs(f(hi))
    logger.debug(f"Boundary bisection finished after {steps} steps at s = {hi:.12g}, |gap| = {residual:.3e}")
    if residual > policy.tol_iter:
        raise SearchFailureError(f"Bisection ended with |gap| = {residual:.3e} above tol_iter")
    return BoundaryPoint(z + hi * direction, hi, residual)


def segment_probe(operator, z, t, policy=None):
    """A graph point w with gap(tz + (1-t)w) < 0, for z in [phi_T < c] and 0 < t < 1.

    Candidates are the per-piece minimizers of c(z - alpha), best first.
    At the global minimizer c(z - w) = -gap(z), so the bound
    t[gap(z) + (1-t) c(z - w)] on the segment gap equals t^2 gap(z) < 0.
    """
    policy = _policy(policy)
    t = float(t)
    if not 0.0 < t < 1.0:
        raise PreconditionError(f"t must lie in (0, 1), got {t}")
    g = gap(operator, z, policy)
    if not g < -policy.tol_slack:
        raise PreconditionError(f"gap(z) = {g} must be below -tol_slack")
    if not isinstance(operator, PolygonalOperator):
        raise PreconditionError("Only polygonal operators can have points of [phi_T < c]")

    candidates = []
    for piece in operator.pieces:
        value, parameter = piece_argmin_coupling(piece, z, policy)
        if parameter is not None:
            candidates.append((float(value), piece.at(parameter)))
    candidates.sort(key=lambda item: item[0])

    for _, w in candidates:
        value = gap(operator, t * z + (1 - t) * w, policy)
        if value < -policy.tol_exact:
            return w
    raise SearchFailureError(f"No graph point gives a negative gap on the segment from {z!r} at t = {t}")
