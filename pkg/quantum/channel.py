"""
Quantum Operation

The channel E(t_l, t_0) built from one attention block. On product-basis
projectors it acts as

    Phi(|x_1..x_n><x_1..x_n|) = sum_y p(y | x_1..x_n) |x_1..x_n y><x_1..x_n y|
    Phi(1) = |x_vac><x_vac|

and is realised everywhere else as the measure-and-prepare channel that
first measures in the product basis. That extension is entanglement-breaking,
hence completely positive, and agrees with the linear extension of Phi on
the commutative span of the basis projectors.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import eigvalsh

from model.transformer import (
    AttentionBlock,
    Distribution,
    Scaling,
    TransformerStack,
    similarity_scores,
    softmax,
)
from model.vocab import Embedding, Text, Token
from quantum.fock import (
    MAX_DENSE_DIMENSION,
    DimensionGuardError,
    FockSpace,
    SequenceEnsembleState,
    TokenSequence,
    TruncationError,
    all_sequences,
    to_dense,
)

logger = logging.getLogger(__name__)

HERMITICITY_TOLERANCE = 1e-10


class NonHermitianChoiError(RuntimeError):
    """Raised when a Choi matrix built from Kraus operators is not Hermitian."""


@dataclass(frozen=True)
class QuantumOperation:
    """E(t_l, t_0): depends only on the block's attention mechanism and FFN."""
    source_block: AttentionBlock
    embedding: Embedding
    space: FockSpace
    vacuum_token: Token
    scaling: Scaling = Scaling.INV_SQRT_D

    def __post_init__(self):
        if self.vacuum_token not in self.embedding.vocabulary:
            raise ValueError(f"Vacuum token {self.vacuum_token!r} is not in the vocabulary")
        if self.space.vocab_size != len(self.embedding.vocabulary):
            raise ValueError(
                f"Fock space is built over {self.space.vocab_size} tokens, "
                f"vocabulary has {len(self.embedding.vocabulary)}"
            )
        object.__setattr__(self, 'scaling', Scaling(self.scaling))

    @property
    def vocabulary(self):
        return self.embedding.vocabulary

    def check_input_block(self, n: int) -> None:
        if n > self.space.truncation - 1:
            raise TruncationError(
                f"Block-{n} input would write block {n + 1} beyond the truncation M={self.space.truncation}"
            )

    def transition(self, sequence: Sequence[Token]) -> Distribution:
        """
        Phi's weights on a basis sequence: attention over its positions,
        summed per emitted token. Only emitted tokens appear, in id order.
        """
        scores = similarity_scores(self.source_block, Text(tuple(sequence)), self.embedding, self.scaling)
        attention = softmax(scores)
        emitted = [self.source_block.value_of(t) for t in sequence]
        totals = np.bincount(
            emitted,
            weights=[attention[i] for i in range(len(emitted))],
            minlength=len(self.vocabulary),
        )
        return Distribution({self.vocabulary[i]: float(totals[i]) for i in sorted(set(emitted))})


def build_channels(
    stack: TransformerStack,
    emb: Embedding,
    space: FockSpace,
    vacuum_token: Optional[Token] = None
) -> List[QuantumOperation]:
    """One channel per block of the stack, in order."""
    vacuum_token = vacuum_token or emb.vocabulary[0]
    return [
        QuantumOperation(block, emb, space, vacuum_token, stack.scaling)
        for block in stack.blocks
    ]


def apply_phi(chan: QuantumOperation, sequence: Sequence[Token]) -> SequenceEnsembleState:
    """Phi on |seq><seq|: block-(n+1) ensemble over seq extended by each emitted token."""
    sequence = tuple(sequence)
    if not sequence:
        raise ValueError("Phi on the vacuum is vacuum_action")
    chan.check_input_block(len(sequence))

    dist = chan.transition(sequence)
    return SequenceEnsembleState(
        len(sequence) + 1,
        {sequence + (y,): p for y, p in dist.items()}
    )


def apply_channel(chan: QuantumOperation, state: SequenceEnsembleState) -> SequenceEnsembleState:
    """
    E(rho) for a diagonal ensemble state: sum_seq w(seq) Phi(|seq><seq|).

    Identical output sequences are merged by adding weights; sequences are
    visited in lexicographic order so the result is bit-stable.
    """
    chan.check_input_block(state.block_index)

    merged: Dict[TokenSequence, List[float]] = {}
    for seq, w in state.items():
        for out, p in apply_phi(chan, seq).items():
            merged.setdefault(out, []).append(w * p)

    result = SequenceEnsembleState(
        state.block_index + 1,
        {seq: math.fsum(ws) for seq, ws in merged.items()}
    )
    logger.debug(f"Channel block {state.block_index} -> {result.block_index}: {result.describe()}")
    return result


def vacuum_action(chan: QuantumOperation) -> SequenceEnsembleState:
    """Phi(1) = |x_vac><x_vac| in block 1."""
    return SequenceEnsembleState(1, {(chan.vacuum_token,): 1.0})


def apply_span_element(
    chan: QuantumOperation,
    scalar: complex,
    coefficients: Mapping[TokenSequence, complex]
) -> Dict[TokenSequence, complex]:
    """
    Linear extension of Phi to a0 * 1 + sum_seq a_seq |seq><seq|.

    Returns the image as coefficients on output basis projectors; the scalar
    part lands on (vacuum_token,).
    """
    image: Dict[TokenSequence, List[complex]] = {}
    if scalar != 0:
        image.setdefault((chan.vacuum_token,), []).append(complex(scalar))

    for seq, a in sorted(coefficients.items()):
        if a == 0:
            continue
        for out, p in apply_phi(chan, seq).items():
            image.setdefault(out, []).append(complex(a) * p)

    return {
        seq: complex(math.fsum(c.real for c in cs), math.fsum(c.imag for c in cs))
        for seq, cs in sorted(image.items())
    }


@dataclass(frozen=True)
class KrausSet:
    """
    Kraus operators from a restricted input space to an output space.

    For channels built by kraus_operators the input is blocks 0..max_input_block
    of F(h) and the output is blocks 0..max_input_block+1. Operators are held
    as sparse CSR matrices; dense arrays are converted on construction.
    """
    operators: Tuple[sparse.csr_matrix, ...]
    max_input_block: Optional[int] = None
    vocab_size: Optional[int] = None

    def __post_init__(self):
        operators = tuple(sparse.csr_matrix(k, dtype=complex) for k in self.operators)
        if not operators:
            raise ValueError("A Kraus set needs at least one operator")
        shapes = {k.shape for k in operators}
        if len(shapes) > 1:
            raise ValueError(f"Kraus operators have mixed shapes: {sorted(shapes)}")
        object.__setattr__(self, 'operators', operators)

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def input_dimension(self) -> int:
        return self.operators[0].shape[1]

    @property
    def output_dimension(self) -> int:
        return self.operators[0].shape[0]

    def input_space(self) -> FockSpace:
        return FockSpace(self.vocab_size, self.max_input_block)

    def output_space(self) -> FockSpace:
        return FockSpace(self.vocab_size, self.max_input_block + 1)

    def completeness_defect(self) -> float:
        """Max-norm of sum K^dagger K - I on the input space."""
        total = sparse.csr_matrix((self.input_dimension, self.input_dimension), dtype=complex)
        for k in self.operators:
            total = total + k.conj().T @ k
        residual = total - sparse.identity(self.input_dimension, dtype=complex, format='csr')
        return float(abs(residual).max()) if residual.nnz else 0.0


def kraus_operators(chan: QuantumOperation, max_input_block: int) -> KrausSet:
    """
    Measure-and-prepare Kraus family on blocks 0..max_input_block.

    K_vac = |x_vac><vacuum|, and for each basis sequence seq and emitted token y
    with p(y | seq) > 0, sqrt(p) |seq y><seq|.
    """
    if max_input_block < 1:
        raise ValueError(f"max_input_block must be at least 1, got {max_input_block}")
    chan.check_input_block(max_input_block)

    n_tokens = len(chan.vocabulary)
    source = FockSpace(n_tokens, max_input_block)
    target = FockSpace(n_tokens, max_input_block + 1)
    if target.dimension > MAX_DENSE_DIMENSION:
        raise DimensionGuardError(
            f"Restricted output dimension {target.dimension} exceeds {MAX_DENSE_DIMENSION}"
        )

    def basis_map(out_seq: TokenSequence, in_seq: TokenSequence, amplitude: float) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            ([complex(amplitude)], ([target.basis_index(out_seq)], [source.basis_index(in_seq)])),
            shape=(target.dimension, source.dimension),
        )

    operators = [basis_map((chan.vacuum_token,), (), 1.0)]
    for n in range(1, max_input_block + 1):
        for seq in all_sequences(chan.vocabulary, n):
            for y, p in chan.transition(seq).items():
                if p > 0:
                    operators.append(basis_map(seq + (y,), seq, math.sqrt(p)))

    logger.info(
        f"Built {len(operators)} Kraus operators ({target.dimension}x{source.dimension}) "
        f"on blocks 0..{max_input_block}"
    )
    return KrausSet(tuple(operators), max_input_block=max_input_block, vocab_size=n_tokens)


def apply_kraus(kraus: KrausSet, rho: np.ndarray) -> np.ndarray:
    """sum_K K rho K^dagger, returned dense."""
    rho = sparse.csr_matrix(rho, dtype=complex)
    out = sparse.csr_matrix((kraus.output_dimension, kraus.output_dimension), dtype=complex)
    for k in kraus.operators:
        out = out + k @ rho @ k.conj().T
    return out.toarray()


def restricted_dense(state: SequenceEnsembleState, kraus: KrausSet) -> np.ndarray:
    """Dense form of a state on the Kraus set's input space."""
    return to_dense(state, kraus.input_space()).dense()


def choi_matrix(kraus: KrausSet) -> np.ndarray:
    """
    J = sum_K (I (x) K)|Omega><Omega|(I (x) K)^dagger with |Omega> = sum_i |i>|i>.

    Ordering is input (x) output, so J has shape (d_in d_out) x (d_in d_out).
    """
    d_in, d_out = kraus.input_dimension, kraus.output_dimension
    if d_in * d_out > MAX_DENSE_DIMENSION:
        raise DimensionGuardError(
            f"Choi dimension {d_in * d_out} exceeds {MAX_DENSE_DIMENSION}"
        )
    vectors = np.stack([k.toarray().T.reshape(-1) for k in kraus.operators])
    return vectors.T @ vectors.conj()


def choi_trace_defect(choi: np.ndarray, d_in: int, d_out: int) -> float:
    """Max-norm of Tr_out(J) - I; zero for trace-preserving maps."""
    reduced = np.einsum('iaja->ij', choi.reshape(d_in, d_out, d_in, d_out))
    return float(np.max(np.abs(reduced - np.eye(d_in))))


def verify_cp(kraus: KrausSet) -> float:
    """Minimum eigenvalue of the Choi matrix; >= -1e-10 witnesses complete positivity."""
    choi = choi_matrix(kraus)
    asymmetry = float(np.max(np.abs(choi - choi.conj().T)))
    if asymmetry > HERMITICITY_TOLERANCE:
        raise NonHermitianChoiError(f"Choi matrix deviates from Hermitian by {asymmetry:.3e}")
    return float(eigvalsh(choi).min())
