"""
Transformer Reference

Exact classical decoder-only transformer: similarity scores, softmax,
stochastic self-attention output, depth-L composition, joint-distribution
enumeration and seeded trajectory sampling.

Each block reads the last token of its context as the query and emits
FFN(W^V x_i) with probability softmax(S^(n))_i. Positions that emit the same
token are aggregated into one outcome.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Hashable, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from model.vocab import Embedding, Text, Token, validate_value_closure

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-12
SEED_MODULUS = 2 ** 64


class DimensionMismatchError(ValueError):
    """Raised when block matrices and embeddings disagree on dimensions."""


class Scaling(str, Enum):
    """Similarity scaling convention: 1/sqrt(d) as written, or unscaled."""
    INV_SQRT_D = 'inv_sqrt_d'
    NONE = 'none'

    def factor(self, dim: int) -> float:
        return 1.0 / math.sqrt(dim) if self is Scaling.INV_SQRT_D else 1.0


@dataclass(frozen=True)
class AttentionBlock:
    """
    One building block: attention mechanism (W^Q, W^K, W^V) plus FFN.

    value_map[i] is the id of FFN(W^V x) for the token x with id i.
    """
    W_Q: np.ndarray
    W_K: np.ndarray
    W_V: np.ndarray
    value_map: Tuple[int, ...]

    def __post_init__(self):
        W_Q = np.array(self.W_Q, dtype=float, ndmin=2)
        W_K = np.array(self.W_K, dtype=float, ndmin=2)
        W_V = np.array(self.W_V, dtype=float, ndmin=2)

        if W_Q.shape != W_K.shape:
            raise DimensionMismatchError(
                f"W_Q and W_K must share the shape d'xd, got {W_Q.shape} and {W_K.shape}"
            )
        d = W_Q.shape[1]
        if W_V.shape != (d, d):
            raise DimensionMismatchError(f"W_V must be {d}x{d}, got {W_V.shape}")
        for name, matrix in (('W_Q', W_Q), ('W_K', W_K), ('W_V', W_V)):
            if not np.all(np.isfinite(matrix)):
                raise DimensionMismatchError(f"{name} has non-finite entries")
            matrix.setflags(write=False)

        object.__setattr__(self, 'W_Q', W_Q)
        object.__setattr__(self, 'W_K', W_K)
        object.__setattr__(self, 'W_V', W_V)
        object.__setattr__(self, 'value_map', tuple(int(v) for v in self.value_map))

    @property
    def dim(self) -> int:
        return self.W_Q.shape[1]

    @property
    def d_prime(self) -> int:
        return self.W_Q.shape[0]

    def value_of(self, token: Token) -> int:
        return self.value_map[token.id]

    @classmethod
    def build(
        cls,
        W_Q: Any,
        W_K: Any,
        W_V: Any,
        embedding: Embedding,
        ffn: Optional[Mapping[Token, Token]] = None
    ) -> 'AttentionBlock':
        """
        Build a block, composing the W^V closure map with the FFN lookup.

        Tokens missing from ffn are mapped to themselves.
        """
        closure = validate_value_closure(W_V, embedding)
        ffn = ffn or {}
        value_map = tuple(ffn.get(closure[t], closure[t]).id for t in embedding.vocabulary)
        return cls(W_Q=W_Q, W_K=W_K, W_V=W_V, value_map=value_map)


@dataclass(frozen=True)
class TransformerStack:
    """Transf_L: an ordered composition of L blocks sharing the embedding dimension."""
    blocks: Tuple[AttentionBlock, ...]
    scaling: Scaling = Scaling.INV_SQRT_D

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("A transformer stack needs at least one block")
        dims = {b.dim for b in blocks}
        if len(dims) > 1:
            raise DimensionMismatchError(f"Blocks disagree on the embedding dimension: {sorted(dims)}")
        object.__setattr__(self, 'blocks', blocks)
        object.__setattr__(self, 'scaling', Scaling(self.scaling))

    @property
    def depth(self) -> int:
        return len(self.blocks)

    def truncated(self, depth: int) -> 'TransformerStack':
        return TransformerStack(self.blocks[:depth], self.scaling)


@dataclass(frozen=True)
class ScoreVector:
    """Similarities s_1..s_m between the query and every key position."""
    scores: np.ndarray

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float, ndmin=1)
        if not np.all(np.isfinite(scores)):
            raise ValueError("Similarity scores must be finite")
        scores.setflags(write=False)
        object.__setattr__(self, 'scores', scores)

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class Distribution:
    """Probability weights over outcomes (positions, tokens or measurement outcomes)."""
    weights: Mapping[Hashable, float]

    def __post_init__(self):
        weights = dict(self.weights)
        negative = [k for k, w in weights.items() if w < 0]
        if negative:
            raise ValueError(f"Negative probabilities for outcomes: {negative}")
        total = math.fsum(weights.values())
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"Probabilities sum to {total!r}, not 1")
        object.__setattr__(self, 'weights', weights)

    def __getitem__(self, outcome: Hashable) -> float:
        return self.weights.get(outcome, 0.0)

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def items(self):
        return self.weights.items()

    def total(self) -> float:
        return math.fsum(self.weights.values())


@dataclass(frozen=True)
class JointDistribution:
    """P_T over generated texts of length L, keyed by Text in lexicographic token order."""
    entries: Mapping[Text, float]

    def __post_init__(self):
        entries = dict(sorted(self.entries.items()))
        if not entries:
            raise ValueError("A joint distribution needs at least one outcome")
        lengths = {len(t) for t in entries}
        if len(lengths) > 1:
            raise ValueError(f"Outcome texts have mixed lengths: {sorted(lengths)}")
        if any(p < 0 for p in entries.values()):
            raise ValueError("Joint probabilities must be nonnegative")
        total = math.fsum(entries.values())
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"Joint probabilities sum to {total!r}, not 1")
        object.__setattr__(self, 'entries', entries)

    def __getitem__(self, text: Text) -> float:
        return self.entries.get(text, 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()

    @property
    def depth(self) -> int:
        return len(next(iter(self.entries)))

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def marginalize_last(self) -> 'JointDistribution':
        """Sum out the last generated token, giving the depth L-1 distribution."""
        if self.depth < 2:
            raise ValueError("Cannot marginalize a depth-1 distribution")
        grouped: Dict[Text, List[float]] = {}
        for text, p in self.entries.items():
            grouped.setdefault(Text(text.tokens[:-1]), []).append(p)
        return JointDistribution({t: math.fsum(ps) for t, ps in grouped.items()})

    def by_symbols(self) -> Dict[str, float]:
        """Outcome keys as space-joined symbols, sorted lexicographically."""
        return dict(sorted((t.symbols(), p) for t, p in self.entries.items()))


def _check_dimensions(block: AttentionBlock, emb: Embedding) -> None:
    if block.dim != emb.dim:
        raise DimensionMismatchError(
            f"Block expects embedding dimension {block.dim}, embedding has {emb.dim}"
        )
    if len(block.value_map) != len(emb.vocabulary):
        raise DimensionMismatchError(
            f"Block value map covers {len(block.value_map)} tokens, vocabulary has {len(emb.vocabulary)}"
        )


def similarity_scores(
    block: AttentionBlock,
    text: Text,
    emb: Embedding,
    scaling: Scaling = Scaling.INV_SQRT_D
) -> ScoreVector:
    """
    Similarities between the last token (query) and every position (keys).

    s_i = c <W^Q x_n, W^K x_i>, with c = 1/sqrt(d) or 1 depending on scaling.
    """
    _check_dimensions(block, emb)
    X = emb.matrix(text)
    query = block.W_Q @ X[-1]
    keys = X @ block.W_K.T
    return ScoreVector(Scaling(scaling).factor(emb.dim) * (keys @ query))


def softmax(scores: ScoreVector) -> Distribution:
    """Softmax over key positions (0-based), with max-subtraction."""
    s = scores.scores
    exp = np.exp(s - s.max())
    probs = exp / exp.sum()
    return Distribution({i: float(p) for i, p in enumerate(probs)})


def _position_probabilities(block, text, emb, scaling) -> np.ndarray:
    attention = softmax(similarity_scores(block, text, emb, scaling))
    return np.array([attention[i] for i in range(len(text))])


def next_token_distribution(
    block: AttentionBlock,
    text: Text,
    emb: Embedding,
    scaling: Scaling = Scaling.INV_SQRT_D
) -> Distribution:
    """
    Distribution of the token emitted by one block.

    P(y) = sum of softmax(S^(n))_i over positions i with FFN(W^V x_i) = y.
    Only tokens emitted by some position appear, in id order.
    """
    probs = _position_probabilities(block, text, emb, scaling)
    outputs = [block.value_of(t) for t in text.tokens]

    aggregated: Dict[int, List[float]] = {}
    for out, p in zip(outputs, probs):
        aggregated.setdefault(out, []).append(float(p))

    vocab = emb.vocabulary
    return Distribution({vocab[out]: math.fsum(ps) for out, ps in sorted(aggregated.items())})


def self_attention_output(
    block: AttentionBlock,
    text: Text,
    emb: Embedding,
    scaling: Scaling = Scaling.INV_SQRT_D
) -> np.ndarray:
    """Expected value vector sum_i softmax(S^(n))_i W^V x_i."""
    probs = _position_probabilities(block, text, emb, scaling)
    values = emb.matrix(text) @ block.W_V.T
    return probs @ values


def joint_distribution(stack: TransformerStack, text: Text, emb: Embedding) -> JointDistribution:
    """
    Enumerate the full outcome tree of Transf_L on text.

    At step l the context is text extended by the l-1 generated tokens; each
    leaf's probability is the product of the per-step aggregated probabilities.
    """
    text.check_vocabulary(emb.vocabulary)
    entries: Dict[Text, float] = {}

    def expand(context: Text, generated: Tuple[Token, ...], probability: float) -> None:
        step = len(generated)
        if step == stack.depth:
            entries[Text(generated)] = probability
            return
        dist = next_token_distribution(stack.blocks[step], context, emb, stack.scaling)
        for token, p in dist.items():
            if p > 0:
                expand(context.extended(token), generated + (token,), probability * p)

    expand(text, (), 1.0)
    logger.debug(f"Classical enumeration produced {len(entries)} outcome(s) for depth {stack.depth}")
    return JointDistribution(entries)


def unsigned_seed(seed: Any) -> Any:
    """Integer seeds of any sign map into [0, 2**64); SeedSequences pass through."""
    if isinstance(seed, (int, np.integer)):
        return int(seed) % SEED_MODULUS
    return seed


def derive_trajectory_seeds(seed: int, count: int) -> List[np.random.SeedSequence]:
    """Independent per-trajectory seeds spawned from one root seed."""
    return np.random.SeedSequence(unsigned_seed(seed)).spawn(count)


def make_generator(seed: Any) -> np.random.Generator:
    """PCG64 generator from an integer seed or a SeedSequence."""
    return np.random.Generator(np.random.PCG64(unsigned_seed(seed)))


def draw(dist: Distribution, u: float) -> Tuple[Hashable, float]:
    """
    Inverse-CDF draw from dist with a uniform u in [0, 1).

    Outcomes are scanned in their stored order; rounding slack falls to the
    last outcome with nonzero probability.
    """
    cumulative = 0.0
    chosen = None
    for outcome, p in dist.items():
        if p <= 0:
            continue
        chosen = (outcome, p)
        cumulative += p
        if u < cumulative:
            return chosen
    return chosen


def sample_text(
    stack: TransformerStack,
    text: Text,
    emb: Embedding,
    seed: Any
) -> Tuple[Text, float]:
    """
    Draw one generated text and its probability.

    The stream is PCG64 seeded with seed (an integer or a SeedSequence from
    derive_trajectory_seeds); identical seeds give identical outputs.
    """
    text.check_vocabulary(emb.vocabulary)
    uniforms = make_generator(seed).random(stack.depth)

    context = text
    generated: List[Token] = []
    probability = 1.0
    for block, u in zip(stack.blocks, uniforms):
        token, p = draw(next_token_distribution(block, context, emb, stack.scaling), u)
        generated.append(token)
        probability *= p
        context = context.extended(token)

    return Text(tuple(generated)), probability
