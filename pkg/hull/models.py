# hull/models.py
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError


def _as_rows(values, width=None):
    rows = np.array(values, dtype=float)
    if rows.size == 0:
        return np.zeros((0, width or 0))
    if rows.ndim == 1:
        rows = rows.reshape(-1, 1) if width == 1 else rows.reshape(1, -1)
    return rows


@dataclass(frozen=True, eq=False)
class HullGenerators:
    """conv(points) + cone(rays), stored as row arrays"""

    points: np.ndarray
    rays: np.ndarray = ()

    def __post_init__(self):
        errors = {}
        try:
            points = _as_rows(self.points)
            rays = _as_rows(self.rays, width=points.shape[1] if points.ndim == 2 else None)
        except (TypeError, ValueError):
            raise ValidationError({'points': 'Generators must be numeric vectors of one length'})

        if points.ndim != 2 or points.shape[0] < 1:
            errors['points'] = 'At least one point is required'
        elif rays.ndim != 2 or (rays.shape[0] and rays.shape[1] != points.shape[1]):
            errors['rays'] = f'Rays must have length {points.shape[1]}'
        elif not (np.all(np.isfinite(points)) and np.all(np.isfinite(rays))):
            errors['points'] = 'All coordinates must be finite'
        elif rays.shape[0] and np.any(np.linalg.norm(rays, axis=1) == 0.0):
            errors['rays'] = 'Ray directions must be nonzero'
        if errors:
            raise ValidationError(errors)

        if rays.shape[0] == 0:
            rays = np.zeros((0, points.shape[1]))
        points.setflags(write=False)
        rays.setflags(write=False)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'rays', rays)

    @classmethod
    def from_pairs(cls, points, rays=()):
        """Flatten paired points (x, x*) to vectors of length 2n"""
        dimension = 2 * points[0].dimension
        return cls([p.as_vector() for p in points], [r.as_vector() for r in rays] or np.zeros((0, dimension)))

    @property
    def dimension(self):
        return self.points.shape[1]

    @property
    def generator_count(self):
        return self.points.shape[0] + self.rays.shape[0]

    def combine(self, point_weights, ray_weights):
        point = np.asarray(point_weights) @ self.points
        if self.rays.shape[0]:
            point = point + np.asarray(ray_weights) @ self.rays
        return point

    def sample(self, rng, ray_scale=3.0):
        """A random element of the hull (Dirichlet point weights, exponential ray weights)"""
        point_weights = rng.dirichlet(np.ones(self.points.shape[0]))
        ray_weights = rng.exponential(ray_scale, size=self.rays.shape[0])
        return self.combine(point_weights, ray_weights)


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    point: np.ndarray
    point_weights: np.ndarray
    ray_weights: np.ndarray
    distance: float
    kkt_residual: float
    iterations: int = 0
