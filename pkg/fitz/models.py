# fitz/models.py
from dataclasses import dataclass, field
from typing import Optional

from core.models import MINUS_INF, PLUS_INF, ExtendedReal, PairedPoint, TolerancePolicy


@dataclass(frozen=True)
class SlackReport:
    """One evaluated inequality lhs <= rhs; it holds iff slack >= 0"""

    lhs: ExtendedReal
    rhs: ExtendedReal
    slack: ExtendedReal
    passed: bool
    label: str = ''

    @classmethod
    def evaluate(cls, lhs, rhs, policy=None, label=''):
        """Build a report with slack = rhs - lhs.

        The slack is +inf whenever rhs = +inf or lhs = -inf, so infinite
        sides never produce an indeterminate difference.
        """
        policy = policy or TolerancePolicy.from_settings()
        lhs = ExtendedReal.coerce(lhs)
        rhs = ExtendedReal.coerce(rhs)
        if rhs.is_plus_inf or lhs.is_minus_inf:
            slack = PLUS_INF
        elif lhs.is_plus_inf or rhs.is_minus_inf:
            slack = MINUS_INF
        else:
            slack = rhs - lhs
        return cls(lhs, rhs, slack, slack >= -policy.tol_slack, label)

    def as_dict(self):
        return {
            'label': self.label,
            'lhs': str(self.lhs),
            'rhs': str(self.rhs),
            'slack': str(self.slack),
            'pass': self.passed,
        }


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of [phi_T = c] on the segment from z towards a point of T+"""

    w: PairedPoint
    t: float
    residual: float


@dataclass(frozen=True)
class NIFalsification:
    z: PairedPoint
    gap_value: float


@dataclass(frozen=True)
class ShiftWitness:
    """Outcome of the affine-hull test on one side of Z.

    Either the relevant coordinate lies in the affine hull of D(T) (or R(T)),
    or `point` is the gamma-shifted pair that lands on [phi_T = c].
    """

    side: str
    in_hull: bool
    gamma: Optional[float] = None
    point: Optional[PairedPoint] = None
    residual: Optional[float] = None


@dataclass(frozen=True)
class InclusionWitness:
    """Outcome of the projection inclusion test on one side of Z"""

    side: str
    in_hull: bool
    distance: float
    point: Optional[PairedPoint] = None
    gap_value: Optional[ExtendedReal] = None

    @property
    def holds(self):
        return self.in_hull or self.point is not None


@dataclass(frozen=True)
class SamplerConfig:
    """Mixture used by ni_falsify: uniform box, standard normal and jittered graph points"""

    count: int = 200
    seed: int = 0
    box: float = 3.0
    normal_scale: float = 1.0
    graph_jitter: float = 0.5
    weights: tuple = field(default=(1.0, 1.0, 1.0))
