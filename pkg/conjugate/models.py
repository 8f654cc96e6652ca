# conjugate/models.py
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from core.models import ExtendedReal


def _as_axis(values, name, errors):
    try:
        axis = np.array(values, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        errors[name] = 'Must be a sequence of real numbers'
        return None
    if axis.size < 1:
        errors[name] = 'At least one grid node is required'
    elif not np.all(np.isfinite(axis)):
        errors[name] = 'Grid coordinates must be finite'
    elif np.any(np.diff(axis) <= 0):
        errors[name] = 'Grid coordinates must be strictly increasing'
    axis.setflags(write=False)
    return axis


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function sampled on a 1-D grid or on the product of two 1-D grids.

    Values are stored as floats with +inf marking nodes outside dom f; the
    value array has one axis per coordinate axis.
    """

    coords: tuple
    values: np.ndarray

    def __post_init__(self):
        errors = {}
        coords = _axes(self.coords)
        if not 1 <= len(coords) <= 2:
            raise ValidationError({'coords': 'Grids are 1-D or 2-D'})
        axes = tuple(_as_axis(axis, f'coords[{i}]', errors) for i, axis in enumerate(coords))
        if errors:
            raise ValidationError(errors)

        shape = tuple(axis.size for axis in axes)
        try:
            values = np.array(self.values, dtype=float).reshape(shape)
        except (TypeError, ValueError):
            raise ValidationError({'values': f'Expected {int(np.prod(shape))} values on a grid of shape {shape}'})
        if np.any(np.isnan(values)):
            errors['values'] = 'NaN is not an extended real'
        elif np.any(values == -np.inf):
            errors['values'] = 'Values of -inf are not allowed'
        elif not np.any(np.isfinite(values)):
            errors['values'] = 'At least one value must be finite'
        if errors:
            raise ValidationError(errors)

        values.setflags(write=False)
        object.__setattr__(self, 'coords', axes)
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_callable(cls, coords, fn):
        """Sample fn on the grid; fn takes one argument per axis"""
        axes = tuple(np.asarray(axis, dtype=float) for axis in _axes(coords))
        mesh = np.meshgrid(*axes, indexing='ij')
        return cls(axes, np.vectorize(fn, otypes=[float])(*mesh))

    @classmethod
    def indicator(cls, coords, members):
        """0 on the nodes flagged by members, +inf elsewhere"""
        return cls(coords, np.where(np.asarray(members, dtype=bool), 0.0, np.inf))

    @property
    def dimension(self):
        return len(self.coords)

    @property
    def shape(self):
        return self.values.shape

    @property
    def finite_mask(self):
        return np.isfinite(self.values)

    def node(self, index):
        """Coordinates of the grid node at index (an int or a tuple of ints)"""
        index = np.atleast_1d(index)
        return np.array([axis[i] for axis, i in zip(self.coords, index)])

    def value(self, index):
        return ExtendedReal.from_float(self.values[tuple(np.atleast_1d(index))])

    def mesh(self):
        """Largest spacing between neighbouring nodes over all axes"""
        gaps = [np.diff(axis) for axis in self.coords if axis.size > 1]
        return max((float(g.max()) for g in gaps), default=0.0)

    def slope_bound(self):
        """Largest |finite-difference slope| between neighbouring finite nodes"""
        bound = 0.0
        for axis_index, axis in enumerate(self.coords):
            if axis.size < 2:
                continue
            values = np.moveaxis(self.values, axis_index, -1)
            with np.errstate(invalid='ignore'):
                slopes = np.diff(values, axis=-1) / np.diff(axis)
            slopes = slopes[np.isfinite(slopes)]
            if slopes.size:
                bound = max(bound, float(np.abs(slopes).max()))
        return bound

    def resolution_bound(self):
        """h * L, the error allowance when comparing against continuous closed forms"""
        return self.mesh() * self.slope_bound()


def _axes(coords):
    if isinstance(coords, np.ndarray) or (coords and np.isscalar(coords[0])):
        return (coords,)
    return tuple(coords)
