# opmodel/quadratic.py
"""Closed-form optimization of quadratics over intervals and 2-D boxes.

Every evaluation kernel of the toolkit reduces to one of these two problems:
a quadratic in one parameter over a (possibly unbounded) interval, or a
quadratic in two parameters over a product of two such intervals.
"""
import itertools
import math

import numpy as np

from core.models import MINUS_INF, PLUS_INF, ExtendedReal


def _evaluate(a2, a1, a0, t):
    return a2 * t * t + a1 * t + a0


def maximize_interval_quadratic(a2, a1, a0, lower, upper, tol):
    """Maximize a2 t^2 + a1 t + a0 over [lower, upper].

    Bounds may be infinite. Coefficients with |a2| <= tol are treated as an
    affine function, and on unbounded sides a slope with |a1| <= tol as flat.
    Returns (ExtendedReal, argmax); argmax is None when the sup is +inf.
    """
    lower_open = math.isinf(lower)
    upper_open = math.isinf(upper)

    if abs(a2) <= tol:
        if (upper_open and a1 > tol) or (lower_open and a1 < -tol):
            return PLUS_INF, None
        candidates = [t for t in (lower, upper) if not math.isinf(t)] or [0.0]
    elif a2 > 0:
        if lower_open or upper_open:
            return PLUS_INF, None
        candidates = [lower, upper]
    else:
        vertex = -a1 / (2.0 * a2)
        candidates = [min(max(vertex, lower), upper)]

    best_t = max(candidates, key=lambda t: _evaluate(a2, a1, a0, t))
    return ExtendedReal.finite(_evaluate(a2, a1, a0, best_t)), float(best_t)


def minimize_interval_quadratic(a2, a1, a0, lower, upper, tol):
    """Minimize a2 t^2 + a1 t + a0 over [lower, upper]; (ExtendedReal, argmin)"""
    value, t = maximize_interval_quadratic(-a2, -a1, -a0, lower, upper, tol)
    return -value, t


class BoxQuadratic:
    """q(v) = 1/2 v'Hv + g'v + k over the box lower <= v <= upper in R^2"""

    def __init__(self, hessian, linear, constant, lower, upper, tol):
        self.hessian = np.asarray(hessian, dtype=float)
        self.linear = np.asarray(linear, dtype=float)
        self.constant = float(constant)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.tol = tol

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return float(0.5 * v @ self.hessian @ v + self.linear @ v + self.constant)

    def anchor(self):
        """A feasible finite point, the box point closest to the origin"""
        return np.clip(np.zeros(2), self.lower, self.upper)

    def recession_signs(self, i):
        """Signs s with s * e_i a recession direction of the box"""
        signs = []
        if math.isinf(self.upper[i]):
            signs.append(1.0)
        if math.isinf(self.lower[i]):
            signs.append(-1.0)
        return signs

    def recession_generators(self):
        generators = []
        for i in range(2):
            for sign in self.recession_signs(i):
                d = np.zeros(2)
                d[i] = sign
                generators.append(d)
        return generators

    def curvature_directions(self):
        """Directions d of the recession cone ranked by curvature d'Hd.

        Returns a list of (curvature, d) containing the axis generators and,
        for every quadrant spanned by two generators, the minimal-curvature
        unit direction inside that quadrant.
        """
        directions = [(float(d @ self.hessian @ d), d) for d in self.recession_generators()]
        for s0, s1 in itertools.product(self.recession_signs(0), self.recession_signs(1)):
            signs = np.array([s0, s1])
            quadrant_form = self.hessian * np.outer(signs, signs)
            eigenvalues, eigenvectors = np.linalg.eigh(quadrant_form)
            vector = eigenvectors[:, 0]
            if vector[0] < 0:
                vector = -vector
            if vector[0] > 0 and vector[1] > 0:
                directions.append((float(eigenvalues[0]), signs * vector))
        return directions

    def slope_infimum(self, d):
        """inf over the box of the directional derivative (Hv + g) . d, with its argmin"""
        hd = self.hessian @ d
        point = self.anchor()
        value = float(self.linear @ d)
        for i in range(2):
            if abs(hd[i]) <= self.tol:
                continue
            bound = self.lower[i] if hd[i] > 0 else self.upper[i]
            if math.isinf(bound):
                return MINUS_INF, None
            point[i] = bound
        return ExtendedReal.finite(value + float(hd @ point)), point

    def unbounded_direction(self):
        """A recession direction along which q decreases without bound, or None"""
        directions = self.curvature_directions()
        for curvature, d in directions:
            if curvature < -self.tol:
                return d
        for curvature, d in directions:
            if curvature > self.tol:
                continue
            slope, _ = self.slope_infimum(d)
            if slope < -self.tol:
                return d
        return None

    def descend(self, d, target):
        """A feasible point with q below target found by walking to infinity along d.

        When d has zero curvature the walk bends along another recession
        generator e, v(R) = v0 + R e + R^2 d, so the cubic term drives q down.
        """
        origin = self.anchor()
        paths = [lambda r: origin + r * d]
        for e in self.recession_generators():
            paths.append(lambda r, e=e: origin + r * e + r * r * d)
        for exponent in range(0, 80):
            radius = 2.0 ** exponent
            for path in paths:
                v = path(radius)
                if self(v) < target:
                    return v
        return None

    def _face_candidates(self):
        bounds = []
        for i in range(2):
            options = ['free']
            options += [side for side, value in (('lower', self.lower[i]), ('upper', self.upper[i]))
                        if not math.isinf(value)]
            bounds.append(options)

        for choice in itertools.product(*bounds):
            v = np.zeros(2)
            free = []
            for i, side in enumerate(choice):
                if side == 'free':
                    free.append(i)
                else:
                    v[i] = self.lower[i] if side == 'lower' else self.upper[i]
            if not free:
                yield v
                continue
            fixed = [i for i in range(2) if i not in free]
            rhs = -(self.linear[free] + self.hessian[np.ix_(free, fixed)] @ v[fixed])
            block = self.hessian[np.ix_(free, free)]
            point = self._stationary_point(block, rhs, free, v)
            if point is not None:
                yield point

    def _stationary_point(self, block, rhs, free, v):
        scale = max(1.0, float(np.abs(block).max()))
        solution, _, rank, _ = np.linalg.lstsq(block, rhs, rcond=None)
        if np.linalg.norm(block @ solution - rhs) > self.tol * max(1.0, float(np.linalg.norm(rhs))):
            return None
        point = v.copy()
        point[free] = solution
        if rank < len(free) and len(free) == 2:
            # stationary set is the line point + s * null, q is constant on it
            null = np.linalg.svd(block)[2][-1]
            point = self._line_box_point(point, null)
            if point is None:
                return None
        elif rank < len(free):
            i = free[0]
            point[i] = min(max(0.0, self.lower[i]), self.upper[i])
        slack = self.tol * scale
        if np.all(point >= self.lower - slack) and np.all(point <= self.upper + slack):
            return np.clip(point, self.lower, self.upper)
        return None

    def _line_box_point(self, point, direction):
        low, high = -math.inf, math.inf
        for i in range(2):
            if abs(direction[i]) <= self.tol:
                if not (self.lower[i] - self.tol <= point[i] <= self.upper[i] + self.tol):
                    return None
                continue
            a = (self.lower[i] - point[i]) / direction[i]
            b = (self.upper[i] - point[i]) / direction[i]
            low, high = max(low, min(a, b)), min(high, max(a, b))
        if low > high + self.tol:
            return None
        s = min(max(0.0, low), high)
        return point + s * direction

    def minimize(self):
        """Exact minimum over the box: (ExtendedReal, argmin or a witness point below -tol)"""
        direction = self.unbounded_direction()
        if direction is not None:
            return MINUS_INF, self.descend(direction, -1.0)

        best_value, best_point = PLUS_INF, None
        for point in self._face_candidates():
            value = self(point)
            if best_point is None or value < float(best_value):
                best_value, best_point = ExtendedReal.finite(value), point
        if best_point is None:
            best_point = self.anchor()
            best_value = ExtendedReal.finite(self(best_point))
        return best_value, best_point
