"""
Truncated Fock Space

F^(M)(h) = C + h + h^(x)2 + ... + h^(x)M over the token space h = C^N,
block-diagonal operators diag(alpha, A^(1), ..., A^(M)), and sparse states
that are probability mixtures of product-basis projectors in one block.

Dense operators exist for verification only and are guarded by
MAX_DENSE_DIMENSION.
"""

import logging
import math
from dataclasses import dataclass
from itertools import product
from types import MappingProxyType
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import block_diag

from model.vocab import Text, Token

logger = logging.getLogger(__name__)

MAX_DENSE_DIMENSION = 4096
WEIGHT_TOLERANCE = 1e-12

TokenSequence = Tuple[Token, ...]


class TruncationError(ValueError):
    """Raised when a sequence would leave the truncated Fock space."""


class DimensionGuardError(ValueError):
    """Raised when a dense representation would exceed MAX_DENSE_DIMENSION."""


class InvalidStateError(ValueError):
    """Raised when ensemble weights do not form a probability distribution."""


@dataclass(frozen=True)
class FockSpace:
    """F^(M)(h) for a vocabulary of size N, truncated at block M."""
    vocab_size: int
    truncation: int

    def __post_init__(self):
        if self.vocab_size < 1:
            raise ValueError(f"Vocabulary size must be positive, got {self.vocab_size}")
        if self.truncation < 1:
            raise ValueError(f"Truncation M must be at least 1, got {self.truncation}")

    @classmethod
    def for_run(cls, vocab_size: int, text_length: int, depth: int) -> 'FockSpace':
        """Space with M = n + L, the deepest block a protocol run populates."""
        return cls(vocab_size, text_length + depth)

    def block_dimension(self, n: int) -> int:
        return self.vocab_size ** n

    def block_offset(self, n: int) -> int:
        """Global index of the first basis vector of block n."""
        return sum(self.vocab_size ** k for k in range(n))

    @property
    def dimension(self) -> int:
        return self.block_offset(self.truncation + 1)

    def check_block(self, n: int) -> None:
        if not 0 <= n <= self.truncation:
            raise TruncationError(f"Block {n} lies outside F^({self.truncation})(h)")

    def sequence_index(self, sequence: Sequence[Token]) -> int:
        """Index within its block, Kronecker order (first token most significant)."""
        index = 0
        for token in sequence:
            index = index * self.vocab_size + token.id
        return index

    def basis_index(self, sequence: Sequence[Token]) -> int:
        """Global index of |x_1 ... x_n>; the empty sequence is the vacuum."""
        n = len(sequence)
        self.check_block(n)
        return self.block_offset(n) + self.sequence_index(sequence)

    def guard_dense(self) -> None:
        if self.dimension > MAX_DENSE_DIMENSION:
            raise DimensionGuardError(
                f"Dense F^({self.truncation}) with N={self.vocab_size} has dimension "
                f"{self.dimension} > {MAX_DENSE_DIMENSION}"
            )


@dataclass(frozen=True)
class BlockDiagOperator:
    """
    diag(alpha, A^(1), ..., A^(M)).

    blocks[n-1] is A^(n) as a dense N^n x N^n complex matrix, or None for the
    zero block.
    """
    space: FockSpace
    scalar_part: complex
    blocks: Tuple[Optional[np.ndarray], ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if len(blocks) != self.space.truncation:
            raise ValueError(f"Expected {self.space.truncation} blocks, got {len(blocks)}")

        checked = []
        for n, block in enumerate(blocks, start=1):
            if block is None:
                checked.append(None)
                continue
            block = np.asarray(block, dtype=complex)
            size = self.space.block_dimension(n)
            if block.shape != (size, size):
                raise ValueError(f"Block {n} must be {size}x{size}, got {block.shape}")
            checked.append(block)

        object.__setattr__(self, 'scalar_part', complex(self.scalar_part))
        object.__setattr__(self, 'blocks', tuple(checked))

    @classmethod
    def zero(cls, space: FockSpace) -> 'BlockDiagOperator':
        return cls(space, 0.0, (None,) * space.truncation)

    def block(self, n: int) -> np.ndarray:
        """A^(n) as a dense matrix (zeros for an absent block); n = 0 is the scalar."""
        if n == 0:
            return np.array([[self.scalar_part]])
        stored = self.blocks[n - 1]
        if stored is None:
            size = self.space.block_dimension(n)
            return np.zeros((size, size), dtype=complex)
        return stored

    def dense(self) -> np.ndarray:
        """The full matrix on F^(M)(h)."""
        self.space.guard_dense()
        return block_diag(*(self.block(n) for n in range(self.space.truncation + 1)))

    def _check_space(self, other: 'BlockDiagOperator') -> None:
        if other.space != self.space:
            raise ValueError("Operators act on different Fock spaces")

    def __add__(self, other: 'BlockDiagOperator') -> 'BlockDiagOperator':
        self._check_space(other)
        return BlockDiagOperator(
            self.space,
            self.scalar_part + other.scalar_part,
            tuple(_add(a, b) for a, b in zip(self.blocks, other.blocks))
        )

    def __matmul__(self, other: 'BlockDiagOperator') -> 'BlockDiagOperator':
        self._check_space(other)
        return BlockDiagOperator(
            self.space,
            self.scalar_part * other.scalar_part,
            tuple(None if a is None or b is None else a @ b for a, b in zip(self.blocks, other.blocks))
        )

    def __mul__(self, factor: complex) -> 'BlockDiagOperator':
        return BlockDiagOperator(
            self.space,
            self.scalar_part * factor,
            tuple(None if b is None else b * factor for b in self.blocks)
        )

    __rmul__ = __mul__


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def identity(space: FockSpace) -> BlockDiagOperator:
    """diag(1, I_h, I_h^(x)2, ..., I_h^(x)M)."""
    return BlockDiagOperator(
        space,
        1.0,
        tuple(np.eye(space.block_dimension(n), dtype=complex) for n in range(1, space.truncation + 1))
    )


def trace(op: BlockDiagOperator) -> complex:
    """alpha plus the traces of the present blocks."""
    return op.scalar_part + sum(np.trace(b) for b in op.blocks if b is not None)


@dataclass(frozen=True)
class SequenceEnsembleState:
    """
    diag(0, ..., 0, sum_seq w(seq) |seq><seq|, 0, ...) with the nonzero block at block_index.

    weights maps length-n token sequences to nonnegative weights summing to 1.
    Entries are kept in lexicographic sequence order.
    """
    block_index: int
    weights: Mapping[TokenSequence, float]

    def __post_init__(self):
        if self.block_index < 1:
            raise InvalidStateError(f"Ensemble states live in blocks >= 1, got {self.block_index}")

        weights: Dict[TokenSequence, float] = {}
        for seq, w in sorted(self.weights.items()):
            seq = tuple(seq)
            if len(seq) != self.block_index:
                raise InvalidStateError(
                    f"Sequence of length {len(seq)} in a block-{self.block_index} state"
                )
            if not math.isfinite(w) or w < 0:
                raise InvalidStateError(f"Invalid weight {w!r} on {_fmt(seq)}")
            weights[seq] = float(w)

        total = math.fsum(weights.values())
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise InvalidStateError(f"State weights sum to {total!r}, not 1")

        object.__setattr__(self, 'weights', MappingProxyType(weights))

    def __iter__(self) -> Iterator[TokenSequence]:
        return iter(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def items(self):
        return self.weights.items()

    def weight(self, sequence: Sequence[Token]) -> float:
        return self.weights.get(tuple(sequence), 0.0)

    def total_weight(self) -> float:
        return math.fsum(self.weights.values())

    def expectation(self, observable: Callable[[TokenSequence], float]) -> float:
        """Tr[O rho] for an observable diagonal in the product basis, given by its eigenvalue function."""
        return math.fsum(w * observable(seq) for seq, w in self.weights.items())

    def describe(self) -> str:
        return ', '.join(f"{_fmt(seq)}: {w:.6g}" for seq, w in self.weights.items())


def _fmt(seq: Sequence[Token]) -> str:
    return '(' + ','.join(t.symbol for t in seq) + ')'


def input_state(text: Text, space: FockSpace) -> SequenceEnsembleState:
    """rho_T: weight 1 on (x_1, ..., x_n) in block n."""
    if text.length > space.truncation:
        raise TruncationError(
            f"Text of length {text.length} exceeds the truncation M={space.truncation}"
        )
    return SequenceEnsembleState(text.length, {text.tokens: 1.0})


def mix(states: Sequence[SequenceEnsembleState], coefficients: Sequence[float]) -> SequenceEnsembleState:
    """Convex combination of states living in the same block."""
    if len(states) != len(coefficients) or not states:
        raise ValueError("Need one coefficient per state")
    blocks = {s.block_index for s in states}
    if len(blocks) > 1:
        raise InvalidStateError(f"Cannot mix states from blocks {sorted(blocks)}")

    merged: Dict[TokenSequence, List[float]] = {}
    for state, c in zip(states, coefficients):
        for seq, w in state.items():
            merged.setdefault(seq, []).append(c * w)
    return SequenceEnsembleState(blocks.pop(), {seq: math.fsum(ws) for seq, ws in merged.items()})


def to_dense(state: SequenceEnsembleState, space: FockSpace) -> BlockDiagOperator:
    """Dense operator whose only nonzero block is diag(weights) in the product basis."""
    space.guard_dense()
    space.check_block(state.block_index)

    n = state.block_index
    diagonal = np.zeros(space.block_dimension(n))
    for seq, w in state.items():
        diagonal[space.sequence_index(seq)] = w

    blocks: List[Optional[np.ndarray]] = [None] * space.truncation
    blocks[n - 1] = np.diag(diagonal).astype(complex)
    return BlockDiagOperator(space, 0.0, tuple(blocks))


def all_sequences(tokens: Iterable[Token], n: int) -> Iterator[TokenSequence]:
    """Every length-n sequence over tokens, in lexicographic (Kronecker) order."""
    return product(sorted(tokens), repeat=n)
