"""
Distribution Comparison

Elementwise comparison of two joint distributions, and the chi-square
goodness-of-fit check for sampled outcome counts.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping

import numpy as np
from scipy import stats

from model.transformer import JointDistribution
from model.vocab import Text

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OutcomeComparison:
    text: Text
    classical: float
    quantum: float

    @property
    def diff(self) -> float:
        return self.quantum - self.classical


@dataclass(frozen=True)
class ComparisonReport:
    """total_variation = 1/2 sum |diff| over the union of both supports."""
    total_variation: float
    max_abs_diff: float
    per_outcome: List[OutcomeComparison]

    def passed(self, threshold: float) -> bool:
        return self.total_variation <= threshold

    def to_dict(self) -> Dict[str, Any]:
        return {
            'total_variation': self.total_variation,
            'max_abs_diff': self.max_abs_diff,
            'per_outcome': [
                {
                    'text': row.text.symbols(),
                    'classical': row.classical,
                    'quantum': row.quantum,
                    'diff': row.diff,
                }
                for row in self.per_outcome
            ],
        }


def compare(classical: JointDistribution, quantum: JointDistribution) -> ComparisonReport:
    """Compare two joint distributions; outcomes missing from one side count as 0."""
    outcomes = sorted(set(classical.entries) | set(quantum.entries))
    rows = [OutcomeComparison(t, classical[t], quantum[t]) for t in outcomes]
    diffs = [abs(r.diff) for r in rows]

    report = ComparisonReport(
        total_variation=0.5 * math.fsum(diffs),
        max_abs_diff=max(diffs),
        per_outcome=rows,
    )
    logger.debug(f"Compared {len(rows)} outcomes: TV={report.total_variation:.3e}")
    return report


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    degrees_of_freedom: int
    critical_value: float
    p_value: float
    alpha: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_value

    def to_dict(self) -> Dict[str, Any]:
        # non-finite values render as null
        return {
            'statistic': self.statistic if math.isfinite(self.statistic) else None,
            'degrees_of_freedom': self.degrees_of_freedom,
            'critical_value': self.critical_value if math.isfinite(self.critical_value) else None,
            'p_value': self.p_value,
            'alpha': self.alpha,
            'passed': self.passed,
        }


def chi_square_check(
    counts: Mapping[Text, int],
    joint: JointDistribution,
    alpha: float = 0.001
) -> ChiSquareResult:
    """
    Pearson chi-square of sampled counts against the exact joint distribution.

    Degrees of freedom are the number of outcomes with nonzero probability
    minus one. Counts on zero-probability outcomes fail the check outright.
    """
    stray = [t for t, c in counts.items() if c and joint[t] <= 0]
    if stray:
        logger.warning(f"Samples landed on zero-probability outcomes: {[t.symbols() for t in stray]}")
        return ChiSquareResult(math.inf, len(joint) - 1, 0.0, 0.0, alpha)

    outcomes = [t for t, p in joint.items() if p > 0]
    total = sum(counts.values())
    observed = np.array([counts.get(t, 0) for t in outcomes], dtype=float)
    expected = np.array([joint[t] for t in outcomes]) * total
    # rescale so the sums agree exactly, as scipy requires
    expected *= observed.sum() / expected.sum()

    df = len(outcomes) - 1
    if df == 0:
        return ChiSquareResult(0.0, 0, math.inf, 1.0, alpha)

    statistic, p_value = stats.chisquare(observed, expected)
    return ChiSquareResult(
        statistic=float(statistic),
        degrees_of_freedom=df,
        critical_value=float(stats.chi2.ppf(1.0 - alpha, df)),
        p_value=float(p_value),
        alpha=alpha,
    )
