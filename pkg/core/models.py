# core/models.py
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import total_ordering

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from .exceptions import DimensionMismatchError, IndeterminateFormError


def _as_readonly_vector(values, field_name, errors):
    """Coerce to a finite 1-D float64 array, recording problems under field_name"""
    try:
        vector = np.array(values, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        errors[field_name] = 'Must be a sequence of real numbers'
        return None
    if not np.all(np.isfinite(vector)):
        errors[field_name] = 'All coordinates must be finite'
    vector.setflags(write=False)
    return vector


@dataclass(frozen=True, eq=False)
class PairedPoint:
    """An element z = (x, x*) of Z = R^n x R^n"""

    x: np.ndarray
    xstar: np.ndarray

    def __post_init__(self):
        errors = {}
        x = _as_readonly_vector(self.x, 'x', errors)
        xstar = _as_readonly_vector(self.xstar, 'xstar', errors)

        if x is not None and xstar is not None:
            if x.size < 1:
                errors['x'] = 'Dimension must be at least 1'
            elif x.size != xstar.size:
                errors['xstar'] = f'Expected {x.size} coordinates, got {xstar.size}'

        if errors:
            raise ValidationError(errors)

        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'xstar', xstar)

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def from_vector(cls, vector):
        """Split a length-2n vector into its primal and dual halves"""
        vector = np.asarray(vector, dtype=float).reshape(-1)
        if vector.size % 2:
            raise DimensionMismatchError(f"A pair vector needs even length, got {vector.size}")
        n = vector.size // 2
        return cls(vector[:n], vector[n:])

    @property
    def dimension(self):
        return self.x.size

    def as_vector(self):
        return np.concatenate([self.x, self.xstar])

    def as_lists(self):
        return {'x': self.x.tolist(), 'xstar': self.xstar.tolist()}

    def is_zero(self, tol=0.0):
        return bool(np.all(np.abs(self.x) <= tol) and np.all(np.abs(self.xstar) <= tol))

    def allclose(self, other, tol):
        self._check_dimension(other)
        return bool(np.allclose(self.x, other.x, rtol=0.0, atol=tol)
                    and np.allclose(self.xstar, other.xstar, rtol=0.0, atol=tol))

    def _check_dimension(self, other):
        if self.dimension != other.dimension:
            raise DimensionMismatchError(
                f"Paired points of dimension {self.dimension} and {other.dimension} cannot be combined"
            )

    def __add__(self, other):
        if not isinstance(other, PairedPoint):
            return NotImplemented
        self._check_dimension(other)
        return PairedPoint(self.x + other.x, self.xstar + other.xstar)

    def __sub__(self, other):
        if not isinstance(other, PairedPoint):
            return NotImplemented
        self._check_dimension(other)
        return PairedPoint(self.x - other.x, self.xstar - other.xstar)

    def __neg__(self):
        return PairedPoint(-self.x, -self.xstar)

    def __mul__(self, scalar):
        if isinstance(scalar, PairedPoint):
            return NotImplemented
        scalar = float(scalar)
        return PairedPoint(scalar * self.x, scalar * self.xstar)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PairedPoint):
            return NotImplemented
        return bool(np.array_equal(self.x, other.x) and np.array_equal(self.xstar, other.xstar))

    __hash__ = None

    def __repr__(self):
        return f"PairedPoint(x={self.x.tolist()}, xstar={self.xstar.tolist()})"


class Kind(Enum):
    FINITE = 'finite'
    PLUS_INF = '+inf'
    MINUS_INF = '-inf'


@total_ordering
@dataclass(frozen=True)
class ExtendedReal:
    """A value of R u {+inf, -inf}.

    Sums follow (+inf) + r = +inf and (-inf) + r = -inf for finite r.
    (+inf) + (-inf) raises IndeterminateFormError. Scaling uses 0 * (+-inf) = 0.
    """

    kind: Kind
    value: float = 0.0

    def __post_init__(self):
        if self.kind is Kind.FINITE:
            if not math.isfinite(self.value):
                raise ValidationError({'value': f'Finite payload required, got {self.value!r}'})
            object.__setattr__(self, 'value', float(self.value))
        else:
            object.__setattr__(self, 'value', math.inf if self.kind is Kind.PLUS_INF else -math.inf)

    @classmethod
    def finite(cls, value):
        return cls(Kind.FINITE, float(value))

    @classmethod
    def from_float(cls, value):
        value = float(value)
        if math.isnan(value):
            raise ValidationError({'value': 'NaN is not an extended real'})
        if value == math.inf:
            return PLUS_INF
        if value == -math.inf:
            return MINUS_INF
        return cls(Kind.FINITE, value)

    @classmethod
    def coerce(cls, value):
        return value if isinstance(value, ExtendedReal) else cls.from_float(value)

    @property
    def is_finite(self):
        return self.kind is Kind.FINITE

    @property
    def is_plus_inf(self):
        return self.kind is Kind.PLUS_INF

    @property
    def is_minus_inf(self):
        return self.kind is Kind.MINUS_INF

    def __float__(self):
        return self.value

    def __add__(self, other):
        other = ExtendedReal.coerce(other)
        if {self.kind, other.kind} == {Kind.PLUS_INF, Kind.MINUS_INF}:
            raise IndeterminateFormError("(+inf) + (-inf) is undefined")
        if not self.is_finite:
            return self
        if not other.is_finite:
            return other
        return ExtendedReal.from_float(self.value + other.value)

    __radd__ = __add__

    def __neg__(self):
        if self.is_plus_inf:
            return MINUS_INF
        if self.is_minus_inf:
            return PLUS_INF
        return ExtendedReal.finite(-self.value)

    def __sub__(self, other):
        return self + (-ExtendedReal.coerce(other))

    def __rsub__(self, other):
        return ExtendedReal.coerce(other) + (-self)

    def __mul__(self, scalar):
        if isinstance(scalar, ExtendedReal):
            if not scalar.is_finite:
                return NotImplemented
            scalar = scalar.value
        scalar = float(scalar)
        if not math.isfinite(scalar):
            raise ValidationError({'scalar': 'Only finite scalars may multiply an extended real'})
        if self.is_finite:
            return ExtendedReal.finite(scalar * self.value)
        if scalar == 0.0:
            return ExtendedReal.finite(0.0)
        return self if scalar > 0 else -self

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            return self.value == float(other)
        if not isinstance(other, ExtendedReal):
            return NotImplemented
        return self.kind is other.kind and self.value == other.value

    def __lt__(self, other):
        if isinstance(other, (int, float)):
            return self.value < float(other)
        if not isinstance(other, ExtendedReal):
            return NotImplemented
        return self.value < other.value

    def __hash__(self):
        return hash(self.value)

    def __str__(self):
        if self.is_plus_inf:
            return 'inf'
        if self.is_minus_inf:
            return '-inf'
        return repr(self.value)


PLUS_INF = ExtendedReal(Kind.PLUS_INF)
MINUS_INF = ExtendedReal(Kind.MINUS_INF)
ZERO = ExtendedReal.finite(0.0)


@dataclass(frozen=True)
class TolerancePolicy:
    """Tolerances shared by every comparison in the toolkit"""

    tol_exact: float = 1e-9
    tol_iter: float = 1e-7
    tol_slack: float = 1e-8
    bisect_width: float = 1e-12

    def __post_init__(self):
        errors = {
            name: 'Must be strictly positive'
            for name in ('tol_exact', 'tol_iter', 'tol_slack', 'bisect_width')
            if not getattr(self, name) > 0
        }
        if errors:
            raise ValidationError(errors)

    @classmethod
    def from_settings(cls, **overrides):
        config = settings.FITZLAB
        policy = cls(
            tol_exact=config['TOL_EXACT'],
            tol_iter=config['TOL_ITER'],
            tol_slack=config['TOL_SLACK'],
            bisect_width=config['BISECT_WIDTH'],
        )
        return policy.with_overrides(**overrides)

    def with_overrides(self, **overrides):
        """Return a copy with every non-None override applied"""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **changes) if changes else self


@dataclass(frozen=True)
class WeightedNorm:
    """||(x, x*)||_delta = sqrt(delta ||x||^2 + ||x*||^2 / delta)"""

    delta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValidationError({'delta': f'Must be a positive finite real, got {self.delta!r}'})

    def coordinate_scale(self, n):
        """Per-coordinate factors turning the delta-norm on R^n x R^n into the Euclidean one"""
        root = math.sqrt(self.delta)
        return np.concatenate([np.full(n, root), np.full(n, 1.0 / root)])
