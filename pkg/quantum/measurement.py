"""
Measurement

The projector-valued measures X_l over Omega = {DIAMOND} + T that read the
freshly written token, and the von Neumann-Lueders state reduction.

A PVM with base block n measures block n+1:

    X({x})       = diag(0, ..., 0, I_h^(x)n (x) |x><x|, 0, ...)
    X({DIAMOND}) = diag(1, I_h, ..., I_h^(x)n, 0, I_h^(x)(n+2), ...)
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Tuple, Union

import numpy as np

from model.transformer import Distribution
from model.vocab import Token, Vocabulary
from quantum.fock import (
    BlockDiagOperator,
    FockSpace,
    SequenceEnsembleState,
    TokenSequence,
    TruncationError,
    trace,
)

logger = logging.getLogger(__name__)

# The "no new token" outcome
DIAMOND = '⋄'

Outcome = Union[str, Token]


class ZeroProbabilityOutcomeError(ValueError):
    """Raised when reducing on an outcome that cannot occur."""


@dataclass(frozen=True)
class PVM:
    """X_l: measures block base_block + 1 and reads its last token."""
    base_block: int
    space: FockSpace
    vocabulary: Vocabulary

    def __post_init__(self):
        if self.base_block < 0:
            raise ValueError(f"Base block must be nonnegative, got {self.base_block}")
        if self.measured_block > self.space.truncation:
            raise TruncationError(
                f"PVM measures block {self.measured_block} beyond the truncation M={self.space.truncation}"
            )
        if len(self.vocabulary) != self.space.vocab_size:
            raise ValueError("PVM vocabulary does not match the Fock space")

    @property
    def measured_block(self) -> int:
        return self.base_block + 1

    @property
    def outcomes(self) -> Tuple[Outcome, ...]:
        """DIAMOND first, then tokens by ascending id."""
        return (DIAMOND,) + tuple(self.vocabulary)

    def projector(self, outcome: Outcome) -> BlockDiagOperator:
        """Dense block-diagonal projector X({outcome})."""
        space = self.space
        blocks: List = [None] * space.truncation

        if outcome == DIAMOND:
            for n in range(1, space.truncation + 1):
                if n != self.measured_block:
                    blocks[n - 1] = np.eye(space.block_dimension(n), dtype=complex)
            return BlockDiagOperator(space, 1.0, tuple(blocks))

        if outcome not in self.vocabulary:
            raise ValueError(f"Unknown measurement outcome {outcome!r}")
        marker = np.zeros((space.vocab_size, space.vocab_size), dtype=complex)
        marker[outcome.id, outcome.id] = 1.0
        blocks[self.measured_block - 1] = np.kron(
            np.eye(space.block_dimension(self.base_block), dtype=complex), marker
        )
        return BlockDiagOperator(space, 0.0, tuple(blocks))

    def projector_for(self, outcomes: Iterable[Outcome]) -> BlockDiagOperator:
        """X(D) for a finite set of outcomes, by additivity over singletons."""
        total = BlockDiagOperator.zero(self.space)
        for outcome in dict.fromkeys(outcomes):
            total = total + self.projector(outcome)
        return total


def outcome_probabilities(pvm: PVM, state: SequenceEnsembleState) -> Distribution:
    """
    Tr[X({w}) rho] for every w in Omega.

    P(x) is the weight of block-(n+1) sequences ending in x; P(DIAMOND) is the
    weight outside block n+1.
    """
    per_token: Dict[Token, List[float]] = {t: [] for t in pvm.vocabulary}
    outside: List[float] = []

    if state.block_index == pvm.measured_block:
        for seq, w in state.items():
            per_token[seq[-1]].append(w)
    else:
        outside.extend(w for _, w in state.items())

    weights: Dict[Hashable, float] = {DIAMOND: math.fsum(outside)}
    for token in pvm.vocabulary:
        weights[token] = math.fsum(per_token[token])
    return Distribution(weights)


def luders_reduce(pvm: PVM, state: SequenceEnsembleState, outcome: Token) -> SequenceEnsembleState:
    """
    E rho E / Tr[E rho] for the outcome's projector E.

    Keeps the sequences ending in outcome and renormalizes them.
    """
    if state.block_index != pvm.measured_block:
        kept: Dict[TokenSequence, float] = {}
    else:
        kept = {seq: w for seq, w in state.items() if seq[-1] == outcome}

    probability = math.fsum(kept.values())
    if probability <= 0:
        raise ZeroProbabilityOutcomeError(
            f"Outcome '{outcome}' has probability zero at block {pvm.measured_block}; cannot reduce"
        )
    return SequenceEnsembleState(
        state.block_index,
        {seq: w / probability for seq, w in kept.items()}
    )


def luders_reduce_dense(projector: BlockDiagOperator, rho: BlockDiagOperator) -> BlockDiagOperator:
    """Dense E rho E / Tr[E rho]."""
    probability = trace(projector @ rho)
    if abs(probability) <= 0:
        raise ZeroProbabilityOutcomeError("Projector has zero weight on the state")
    return (projector @ rho @ projector) * (1.0 / probability)
