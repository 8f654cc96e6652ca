# core/strategies.py
"""Hypothesis strategies for paired points, directions and seeds"""
import numpy as np
from hypothesis import strategies as st

from .models import PairedPoint

coordinates = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)
dimensions = st.integers(min_value=1, max_value=5)
seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
weights = st.floats(min_value=0.0, max_value=1.0)
steps = st.floats(min_value=0.0, max_value=10.0)


def vectors(n, elements=coordinates):
    return st.lists(elements, min_size=n, max_size=n).map(np.array)


def paired_points(n):
    return st.builds(PairedPoint, vectors(n), vectors(n))


@st.composite
def paired_point_tuples(draw, count, max_dimension=5):
    """`count` paired points of one shared, drawn dimension"""
    n = draw(st.integers(min_value=1, max_value=max_dimension))
    return tuple(draw(paired_points(n)) for _ in range(count))
