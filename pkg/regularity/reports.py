from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from django.conf import settings

VERDICTS = ('pass', 'fail', 'inconclusive')


@dataclass(frozen=True)
class CertificationRow:
    sample_id: str
    inputs_hash: str
    lhs: float = float('nan')
    rhs: float = float('nan')
    skipped: bool = False
    note: str = ''

    @property
    def violation(self) -> float:
        return self.lhs - self.rhs

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def verdict(self, tolerance: float) -> str:
        if self.skipped:
            return 'skipped'
        return 'pass' if self.violation <= tolerance else 'fail'

    @classmethod
    def skip(cls, sample_id: str, inputs_hash: str, note: str) -> 'CertificationRow':
        return cls(sample_id, inputs_hash, skipped=True, note=note)


@dataclass(frozen=True)
class CertificationReport:
    """
    Outcome of one certification check. A row passes when
    lhs - rhs <= tolerance; the report passes when every evaluated row
    does, the scale-stability test (if any) holds and no more than the
    configured share of samples was skipped.
    """
    check: str
    rows: List[CertificationRow]
    tolerance: float
    constants: Dict[str, float] = field(default_factory=dict)
    measured: Dict[str, float] = field(default_factory=dict)
    stable: Optional[bool] = None
    seed: Optional[int] = None

    @property
    def sample_count(self) -> int:
        return len(self.rows)

    @property
    def evaluated(self) -> List[CertificationRow]:
        return [row for row in self.rows if not row.skipped]

    @property
    def skipped(self) -> List[CertificationRow]:
        return [row for row in self.rows if row.skipped]

    @property
    def worst_row(self) -> Optional[CertificationRow]:
        # max() keeps the first maximum, so ties resolve to the lowest sample index
        evaluated = self.evaluated
        if not evaluated:
            return None
        return max(evaluated, key=lambda row: row.violation)

    @property
    def worst_violation(self) -> float:
        worst = self.worst_row
        return worst.violation if worst is not None else float('nan')

    @property
    def verdict(self) -> str:
        skip_ratio = getattr(settings, 'MINTAU_INCONCLUSIVE_SKIP_RATIO', 0.2)
        if not self.evaluated or len(self.skipped) > skip_ratio * self.sample_count:
            return 'inconclusive'

        if self.worst_violation > self.tolerance or self.stable is False:
            return 'fail'

        return 'pass'

    @property
    def passed(self) -> bool:
        return self.verdict == 'pass'

    def to_text(self) -> str:
        worst = self.worst_row
        lines = [
            f"check: {self.check}",
            f"verdict: {self.verdict}",
            f"samples: {self.sample_count} (skipped {len(self.skipped)})",
            f"worst violation: {self.worst_violation:.12g}",
            f"witness: {worst.sample_id if worst else '-'} [{worst.inputs_hash if worst else '-'}]",
            f"tolerance: {self.tolerance:.12g}",
        ]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        if self.stable is not None:
            lines.append(f"stable across scales: {self.stable}")
        lines.extend(f"constant {k}: {v:.12g}" for k, v in self.constants.items())
        lines.extend(f"measured {k}: {v:.12g}" for k, v in self.measured.items())
        lines.extend(f"skipped {row.sample_id}: {row.note}" for row in self.skipped)
        return '\n'.join(lines)

    def to_csv(self, path: Union[str, Path]) -> None:
        table = [
            [
                row.sample_id,
                row.inputs_hash,
                f'{row.lhs:.12g}',
                f'{row.rhs:.12g}',
                f'{row.slack:.12g}',
                row.verdict(self.tolerance),
            ]
            for row in self.rows
        ]
        header = f"# check={self.check} seed={self.seed} tolerance={self.tolerance:.12g}\n" \
            "sample_id,inputs_hash,lhs,rhs,slack,verdict"
        np.savetxt(
            path, np.array(table, dtype=object).reshape(-1, 6), fmt='%s', delimiter=',',
            header=header, comments='',
        )


@dataclass(frozen=True)
class SemiconcavityEstimate:
    modulus: float
    h_scales: List[float]
    ratio_by_scale: List[float]
    stable: bool
    report: CertificationReport
