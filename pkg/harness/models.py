# harness/models.py
from dataclasses import dataclass, field
from typing import Optional

from core.models import ExtendedReal

PASS = 'pass'
FAIL = 'fail'
INDETERMINATE = 'indeterminate'


@dataclass(frozen=True, eq=False)
class InstanceOutcome:
    """Result of one randomized suite instance"""

    status: str
    slack: Optional[ExtendedReal] = None
    operator: object = None
    inputs: dict = field(default_factory=dict)
    detail: str = ''
    nonconverged: bool = False
    resampled: int = 0


@dataclass(frozen=True)
class SuiteReport:
    """Aggregate of one suite run; pass + fail + indeterminate = count.

    worst_slack is the minimum slack over passing and failing instances that
    evaluated one. Suites that only return verdicts (cross, r1, argmin-sigma,
    m8-projections) leave it None. resampled counts the draws discarded
    because a boundary segment left dom phi.
    """

    suite: str
    seed: int
    count: int
    passed: int
    failed: int
    indeterminate: int
    worst_slack: Optional[ExtendedReal]
    nonconverged: int = 0
    resampled: int = 0
    failures: tuple = ()

    CSV_HEADER = ('suite', 'seed', 'count', 'pass', 'fail', 'indeterminate', 'worst_slack')

    @property
    def ok(self):
        return self.failed == 0

    @property
    def resample_rate(self):
        return self.resampled / self.count if self.count else 0.0

    def csv_row(self):
        worst = str(self.worst_slack) if self.worst_slack is not None else ''
        return (self.suite, str(self.seed), str(self.count), str(self.passed), str(self.failed),
                str(self.indeterminate), worst)

    def as_text(self):
        worst = str(self.worst_slack) if self.worst_slack is not None else 'n/a'
        lines = [
            f'suite {self.suite} seed={self.seed} count={self.count}',
            f'  pass={self.passed} fail={self.failed} indeterminate={self.indeterminate} worst_slack={worst}',
        ]
        if self.nonconverged:
            lines.append(f'  non-converged projections: {self.nonconverged}')
        if self.resampled:
            lines.append(f'  re-sampled boundary instances: {self.resampled}')
        for failure in self.failures:
            lines.append(f"  FAIL #{failure['index']}: {failure['detail']}")
        return '\n'.join(lines)
