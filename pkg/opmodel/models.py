# opmodel/models.py
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from core.models import ExtendedReal, PairedPoint


class GraphPiece:
    """Common behaviour of the pieces alpha(t) = base + t * direction of a polygonal graph"""

    kind = None
    lower = 0.0
    upper = 0.0

    @property
    def dimension(self):
        return self.base.dimension

    @property
    def parameter_range(self):
        return self.lower, self.upper

    def at(self, t):
        return self.base + float(t) * self.direction

    def sample_parameter(self, rng):
        if self.kind == 'point':
            return 0.0
        if self.kind == 'segment':
            return float(rng.uniform())
        if self.kind == 'ray':
            return float(rng.exponential(2.0))
        return float(rng.normal(scale=3.0))

    def sample(self, rng):
        return self.at(self.sample_parameter(rng))


@dataclass(frozen=True, eq=False)
class PointPiece(GraphPiece):
    z: PairedPoint

    kind = 'point'

    @property
    def base(self):
        return self.z

    @property
    def direction(self):
        return PairedPoint.zeros(self.z.dimension)

    def generators(self):
        return [self.z], []

    def as_dict(self):
        return {'type': self.kind, 'z': self.z.as_lists()}


@dataclass(frozen=True, eq=False)
class SegmentPiece(GraphPiece):
    a: PairedPoint
    b: PairedPoint

    kind = 'segment'
    upper = 1.0

    def __post_init__(self):
        if self.a.dimension != self.b.dimension:
            raise ValidationError({'b': 'Segment endpoints must share a dimension'})
        if self.a == self.b:
            raise ValidationError({'b': 'Segment endpoints coincide, use a point piece'})

    @property
    def base(self):
        return self.a

    @property
    def direction(self):
        return self.b - self.a

    def generators(self):
        return [self.a, self.b], []

    def split(self, t):
        """Two sub-segments meeting at alpha(t), 0 < t < 1"""
        middle = self.at(t)
        return SegmentPiece(self.a, middle), SegmentPiece(middle, self.b)

    def as_dict(self):
        return {'type': self.kind, 'a': self.a.as_lists(), 'b': self.b.as_lists()}


@dataclass(frozen=True, eq=False)
class RayPiece(GraphPiece):
    base: PairedPoint
    dir: PairedPoint

    kind = 'ray'
    upper = math.inf

    def __post_init__(self):
        _validate_direction(self.base, self.dir)

    @property
    def direction(self):
        return self.dir

    def generators(self):
        return [self.base], [self.dir]

    def as_dict(self):
        return {'type': self.kind, 'base': self.base.as_lists(), 'dir': self.dir.as_lists()}


@dataclass(frozen=True, eq=False)
class LinePiece(GraphPiece):
    base: PairedPoint
    dir: PairedPoint

    kind = 'line'
    lower = -math.inf
    upper = math.inf

    def __post_init__(self):
        _validate_direction(self.base, self.dir)

    @property
    def direction(self):
        return self.dir

    def generators(self):
        return [self.base], [self.dir, -self.dir]

    def as_dict(self):
        return {'type': self.kind, 'base': self.base.as_lists(), 'dir': self.dir.as_lists()}


def _validate_direction(base, direction):
    if base.dimension != direction.dimension:
        raise ValidationError({'dir': 'Direction and base must share a dimension'})
    if direction.is_zero():
        raise ValidationError({'dir': 'Direction must be nonzero'})


@dataclass(frozen=True, eq=False)
class PolygonalOperator:
    """A finite union of points, segments, rays and lines in Z"""

    pieces: Tuple[GraphPiece, ...]

    kind = 'polygonal'

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValidationError({'pieces': 'An operator needs at least one piece'})
        dimensions = {piece.dimension for piece in pieces}
        if len(dimensions) > 1:
            raise ValidationError({'pieces': f'Pieces mix dimensions {sorted(dimensions)}'})
        object.__setattr__(self, 'pieces', pieces)

    @classmethod
    def from_points(cls, points):
        return cls(tuple(PointPiece(z) for z in points))

    @property
    def dimension(self):
        return self.pieces[0].dimension

    def sample_graph_point(self, rng):
        piece = self.pieces[int(rng.integers(len(self.pieces)))]
        return piece.sample(rng)

    def __len__(self):
        return len(self.pieces)


@dataclass(frozen=True, eq=False)
class LinearMonotoneOperator:
    """Graph {(a, Aa + b)} of an affine map whose symmetric part is PSD.

    The symmetric part, its eigendecomposition and pseudo-inverse are cached
    at construction; eigenvalues within tol_exact below zero are clamped.
    """

    A: np.ndarray
    b: np.ndarray
    tol_exact: float = 1e-9
    symmetric: np.ndarray = field(init=False, repr=False)
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)
    pseudo_inverse: np.ndarray = field(init=False, repr=False)
    min_eigenvalue: float = field(init=False, repr=False)

    kind = 'linear'

    def __post_init__(self):
        try:
            A = np.array(self.A, dtype=float)
            b = np.array(self.b, dtype=float).reshape(-1)
        except (TypeError, ValueError):
            raise ValidationError({'A': 'A and b must be numeric arrays'})

        errors = {}
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            errors['A'] = f'A must be a nonempty square matrix, got shape {A.shape}'
        elif b.size != A.shape[0]:
            errors['b'] = f'Expected {A.shape[0]} entries, got {b.size}'
        elif not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            errors['A'] = 'All entries must be finite'
        if errors:
            raise ValidationError(errors)

        symmetric = 0.5 * (A + A.T)
        eigenvalues, eigenvectors = np.linalg.eigh(symmetric)
        min_eigenvalue = float(eigenvalues.min())
        if min_eigenvalue < -self.tol_exact:
            raise ValidationError({
                'A': f'Symmetric part is not positive semidefinite (min eigenvalue {min_eigenvalue:.6g})'
            })
        eigenvalues = np.maximum(eigenvalues, 0.0)
        inverted = np.array([1.0 / w if w > self.tol_exact else 0.0 for w in eigenvalues])

        for name, value in (('A', A), ('b', b), ('symmetric', symmetric), ('eigenvalues', eigenvalues),
                            ('eigenvectors', eigenvectors)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        pseudo_inverse = (eigenvectors * inverted) @ eigenvectors.T
        pseudo_inverse.setflags(write=False)
        object.__setattr__(self, 'pseudo_inverse', pseudo_inverse)
        object.__setattr__(self, 'min_eigenvalue', min_eigenvalue)

    @property
    def dimension(self):
        return self.A.shape[0]

    def reconstruction_error(self):
        rebuilt = (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T
        return float(np.abs(rebuilt - self.symmetric).max())

    def graph_point(self, a):
        a = np.asarray(a, dtype=float)
        return PairedPoint(a, self.A @ a + self.b)

    def sample_graph_point(self, rng):
        return self.graph_point(rng.normal(size=self.dimension))


@dataclass(frozen=True)
class CubicOperator:
    """The 1-D curve {(a, a^3)}"""

    kind = 'cubic1d'

    @property
    def dimension(self):
        return 1

    def graph_point(self, a):
        return PairedPoint([a], [a ** 3])

    def sample_graph_point(self, rng):
        return self.graph_point(float(rng.normal(scale=1.5)))


@dataclass(frozen=True)
class MonotonicityResult:
    is_monotone: bool
    minimum: ExtendedReal
    witness: Optional[Tuple[PairedPoint, PairedPoint]] = None

    def __bool__(self):
        return self.is_monotone


@dataclass(frozen=True, eq=False)
class AffineHull:
    """base + span(basis); basis rows are orthonormal"""

    base: np.ndarray
    basis: np.ndarray

    @property
    def rank(self):
        return self.basis.shape[0]

    def residual(self, x):
        """Euclidean distance from x to the affine hull"""
        offset = np.asarray(x, dtype=float) - self.base
        if self.rank:
            offset = offset - self.basis.T @ (self.basis @ offset)
        return float(np.linalg.norm(offset))

    def normal_component(self, x):
        """Component of x - base orthogonal to span(basis)"""
        offset = np.asarray(x, dtype=float) - self.base
        if self.rank:
            offset = offset - self.basis.T @ (self.basis @ offset)
        return offset

    def contains(self, x, tol):
        return self.residual(x) <= tol
