"""
Golden Example

The two-token worked example: input (x0, x1, x0), block 1 with W_K = sigma_x,
block 2 with W_V = sigma_x, no similarity scaling. Checks the six
conditional probabilities of the sequential measurement and the four joint
probabilities against their closed forms.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from model.builder.model_registry import GOLDEN_EXAMPLE_INPUT, ModelRegistry
from model.transformer import JointDistribution, joint_distribution
from quantum.protocol import enumerate_trajectories
from .compare import ComparisonReport, compare

logger = logging.getLogger(__name__)

GOLDEN_TOLERANCE = 1e-12

E = math.e

# outcome prefix -> closed-form probability of its last outcome given the rest
CONDITIONALS = {
    ('x0',): 2 / (E + 2),
    ('x1',): E / (E + 2),
    ('x0', 'x0'): 1 / (3 * E + 1),
    ('x0', 'x1'): 3 * E / (3 * E + 1),
    ('x1', 'x0'): E / (E + 1),
    ('x1', 'x1'): 1 / (E + 1),
}

JOINTS = {
    ('x0', 'x0'): 2 / ((E + 2) * (3 * E + 1)),
    ('x0', 'x1'): 6 * E / ((E + 2) * (3 * E + 1)),
    ('x1', 'x0'): E ** 2 / ((E + 2) * (E + 1)),
    ('x1', 'x1'): E / ((E + 2) * (E + 1)),
}


@dataclass(frozen=True)
class GoldenCheck:
    name: str
    expected: float
    observed: float

    @property
    def error(self) -> float:
        return abs(self.observed - self.expected)

    @property
    def passed(self) -> bool:
        return self.error <= GOLDEN_TOLERANCE


@dataclass
class GoldenReport:
    checks: List[GoldenCheck] = field(default_factory=list)
    comparison: Optional[ComparisonReport] = None

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[GoldenCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'passed': self.passed,
            'checks': [
                {
                    'name': c.name,
                    'expected': c.expected,
                    'observed': c.observed,
                    'error': c.error,
                    'passed': c.passed,
                }
                for c in self.checks
            ],
            'classical_vs_quantum': self.comparison.to_dict() if self.comparison else None,
        }


def golden_example(registry: Optional[ModelRegistry] = None) -> GoldenReport:
    """Run the worked example through both paths and check every displayed probability."""
    registry = registry or ModelRegistry()
    model = registry.load('golden_example')
    text = model.vocabulary.parse(GOLDEN_EXAMPLE_INPUT)

    records = enumerate_trajectories(model.stack, text, model.embedding, model.conventions.vacuum_token)
    observed_conditionals: Dict[tuple, float] = {}
    observed_joints: Dict[tuple, float] = {}
    for record in records:
        symbols = tuple(t.symbol for t in record.outcomes)
        observed_conditionals[symbols[:1]] = record.per_step_probabilities[0]
        observed_conditionals[symbols] = record.per_step_probabilities[1]
        observed_joints[symbols] = record.probability

    report = GoldenReport()
    for key, expected in CONDITIONALS.items():
        label = f"P({key[-1]} | {key[0]})" if len(key) == 2 else f"P({key[0]})"
        report.checks.append(GoldenCheck(label, expected, observed_conditionals.get(key, 0.0)))
    for key, expected in JOINTS.items():
        report.checks.append(GoldenCheck(f"P({', '.join(key)})", expected, observed_joints.get(key, 0.0)))

    quantum = JointDistribution({r.outcomes: r.probability for r in records})
    report.comparison = compare(joint_distribution(model.stack, text, model.embedding), quantum)

    for check in report.failures:
        logger.error(f"Golden check failed: {check.name} expected {check.expected!r}, got {check.observed!r}")
    logger.info(f"Golden example: {len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed")
    return report
