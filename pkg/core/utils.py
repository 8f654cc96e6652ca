# core/utils.py
import math

import numpy as np

from .exceptions import DimensionMismatchError
from .models import MINUS_INF, PLUS_INF, ExtendedReal, WeightedNorm


def check_same_dimension(*points):
    """Raise DimensionMismatchError unless every paired point shares one dimension"""
    dimensions = {point.dimension for point in points}
    if len(dimensions) > 1:
        raise DimensionMismatchError(f"Mixed dimensions {sorted(dimensions)}")
    return dimensions.pop() if dimensions else None


def coupling(z):
    """c(z) = <x, x*>"""
    return float(np.dot(z.x, z.xstar))


def pair_dot(z, w):
    """z . w = <z.x, w.xstar> + <w.x, z.xstar>"""
    check_same_dimension(z, w)
    return float(np.dot(z.x, w.xstar) + np.dot(w.x, z.xstar))


def weighted_norm(z, norm=None):
    norm = norm or WeightedNorm()
    return math.sqrt(norm.delta * float(np.dot(z.x, z.x)) + float(np.dot(z.xstar, z.xstar)) / norm.delta)


def extended_max(values):
    """Maximum of an iterable of extended reals; -inf for an empty iterable"""
    best = MINUS_INF
    for value in values:
        value = ExtendedReal.coerce(value)
        if value > best:
            best = value
            if best.is_plus_inf:
                break
    return best


def extended_min(values):
    """Minimum of an iterable of extended reals; +inf for an empty iterable"""
    best = PLUS_INF
    for value in values:
        value = ExtendedReal.coerce(value)
        if value < best:
            best = value
            if best.is_minus_inf:
                break
    return best
