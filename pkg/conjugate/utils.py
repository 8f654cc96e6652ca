# conjugate/utils.py
import logging

import numpy as np

from core.exceptions import DimensionMismatchError
from core.models import TolerancePolicy
from fitz.models import SlackReport

from .models import GridFunction

logger = logging.getLogger(__name__)

# Brute-force rows are evaluated in blocks of this many dual nodes
BRUTE_BLOCK = 1024


def _policy(policy):
    return policy or TolerancePolicy.from_settings()


def _axis_slopes(f, axis_index):
    """Slopes between consecutive finite nodes along one axis"""
    axis = f.coords[axis_index]
    lines = np.moveaxis(f.values, axis_index, -1).reshape(-1, axis.size)
    slopes = []
    for line in lines:
        finite = np.isfinite(line)
        if finite.sum() >= 2:
            slopes.append(np.diff(line[finite]) / np.diff(axis[finite]))
    return np.concatenate(slopes) if slopes else np.zeros(0)


def default_dual_coords(f):
    """Per axis: the finite-difference slope range widened by 10%, same node count.

    Falls back to [-1, 1] on an axis with fewer than two finite nodes per line,
    and to a unit-width window around a single slope.
    """
    axes = []
    for axis_index, axis in enumerate(f.coords):
        slopes = _axis_slopes(f, axis_index)
        if slopes.size == 0:
            lo, hi = -1.0, 1.0
        else:
            lo, hi = float(slopes.min()), float(slopes.max())
            pad = 0.05 * (hi - lo) if hi > lo else max(0.05 * abs(lo), 0.5)
            lo, hi = lo - pad, hi + pad
        axes.append(np.linspace(lo, hi, axis.size) if axis.size > 1 else np.array([0.5 * (lo + hi)]))
    return tuple(axes)


def _dual_axes(f, dual_coords):
    if dual_coords is None:
        return default_dual_coords(f)
    axes = dual_coords
    if isinstance(axes, np.ndarray) or np.isscalar(axes[0]):
        axes = (axes,)
    if len(axes) != f.dimension:
        raise DimensionMismatchError(f"Grid has {f.dimension} axes, dual grid has {len(axes)}")
    return tuple(np.asarray(axis, dtype=float) for axis in axes)


def brute_conjugate(f, dual_coords=None):
    """f*(s) = max over finite grid nodes x of <x, s> - f(x), node by node"""
    axes = _dual_axes(f, dual_coords)
    primal = np.stack([m[f.finite_mask] for m in np.meshgrid(*f.coords, indexing='ij')], axis=1)
    offsets = f.values[f.finite_mask]
    dual = np.stack([m.reshape(-1) for m in np.meshgrid(*axes, indexing='ij')], axis=1)

    result = np.empty(dual.shape[0])
    for start in range(0, dual.shape[0], BRUTE_BLOCK):
        block = dual[start:start + BRUTE_BLOCK]
        result[start:start + BRUTE_BLOCK] = np.max(block @ primal.T - offsets, axis=1)
    return GridFunction(axes, result.reshape(tuple(axis.size for axis in axes)))


def _lower_hull(x, v):
    """Indices of the lower convex hull of the points (x_i, v_i), x sorted"""
    hull = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or above the chord from a to i
            if (v[b] - v[a]) * (x[i] - x[a]) >= (v[i] - v[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull)


def _conjugate_line(x, v, slopes):
    """max over i of s x_i - v_i for sorted slopes s; -inf when every v_i is +inf.

    The hull vertices have increasing edge slopes, so the maximizing vertex
    index never decreases as s grows and one forward sweep suffices.
    """
    finite = np.isfinite(v)
    if not finite.any():
        return np.full(slopes.size, -np.inf)
    x, v = x[finite], v[finite]
    hull = _lower_hull(x, v)
    hx, hv = x[hull], v[hull]

    result = np.empty(slopes.size)
    k = 0
    for j, s in enumerate(slopes):
        while k + 1 < hx.size and s * hx[k + 1] - hv[k + 1] >= s * hx[k] - hv[k]:
            k += 1
        result[j] = s * hx[k] - hv[k]
    return result


def fast_conjugate(f, dual_coords=None):
    """Linear-time conjugate along each axis; 2-D grids are conjugated in x* then in y*.

    max over (i, j) of s x_i + r y_j - f_ij = max over i of s x_i + g_i(r)
    with g_i(r) = max over j of r y_j - f_ij, so the second pass conjugates
    -g(., r) over the first axis.
    """
    axes = _dual_axes(f, dual_coords)
    if f.dimension == 1:
        return GridFunction(axes, _conjugate_line(f.coords[0], f.values, axes[0]))

    x, y = f.coords
    s_axis, r_axis = axes
    inner = np.vstack([_conjugate_line(y, row, r_axis) for row in f.values])
    result = np.column_stack([_conjugate_line(x, -inner[:, j], s_axis) for j in range(r_axis.size)])
    return GridFunction(axes, result)


def biconjugate(f, dual_coords=None):
    """(f*)* evaluated back on the grid of f; below f and idempotent for a fixed dual grid"""
    axes = _dual_axes(f, dual_coords)
    fstar = fast_conjugate(f, axes)
    return fast_conjugate(fstar, f.coords)


def fenchel_young_check(f, fstar, samples, policy=None):
    """<x, s> <= f(x) + f*(s) at each sampled pair of node indices (i, j)"""
    policy = _policy(policy)
    strict = policy.with_overrides(tol_slack=policy.tol_exact)
    reports = []
    for i, j in samples:
        x, s = f.node(i), fstar.node(j)
        rhs = f.value(i) + fstar.value(j)
        reports.append(SlackReport.evaluate(float(x @ s), rhs, strict, 'fenchel-young'))
    failures = sum(not report.passed for report in reports)
    if failures:
        logger.warning(f"Fenchel-Young failed at {failures} of {len(reports)} sampled pairs")
    return reports


def sample_index_pairs(f, fstar, rng, count):
    """Random (primal index, dual index) pairs for fenchel_young_check"""
    def draw(grid):
        index = tuple(int(rng.integers(size)) for size in grid.shape)
        return index if len(index) > 1 else index[0]
    return [(draw(f), draw(fstar)) for _ in range(count)]


def is_discretely_convex(g, tol):
    """Finite-difference slopes are nondecreasing, within tol, along every grid line"""
    for axis_index, axis in enumerate(g.coords):
        lines = np.moveaxis(g.values, axis_index, -1).reshape(-1, axis.size)
        for line in lines:
            finite = np.flatnonzero(np.isfinite(line))
            if finite.size < 3:
                continue
            # dom must be an interval of the grid line
            if finite[-1] - finite[0] + 1 != finite.size:
                return False
            slopes = np.diff(line[finite]) / np.diff(axis[finite])
            if np.any(np.diff(slopes) < -tol):
                return False
    return True
