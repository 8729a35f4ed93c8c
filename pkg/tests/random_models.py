"""
Random model instances for equivalence and reconstruction tests
"""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from model.transformer import AttentionBlock, Scaling, TransformerStack
from model.vocab import Embedding, Text, Token, Vocabulary


@dataclass(frozen=True)
class RandomInstance:
    stack: TransformerStack
    embedding: Embedding
    text: Text

    def describe(self) -> str:
        return (
            f"N={len(self.embedding.vocabulary)} d={self.embedding.dim} "
            f"d'={self.stack.blocks[0].d_prime} L={self.stack.depth} n={self.text.length} "
            f"scaling={self.stack.scaling.value}"
        )


def _embedding_and_values(rng: np.random.Generator, n_tokens: int, dim: int):
    """
    Embeddings plus a generator of value matrices that permute them.

    With d >= N the tokens are standard basis vectors and W^V is a random
    permutation matrix on them. Otherwise the tokens sit on a circle in the
    first two coordinates and W^V rotates by a random multiple of 2 pi / N.
    """
    if dim >= n_tokens:
        vectors = np.eye(dim)[:n_tokens] * rng.uniform(0.5, 2.0)

        def value_matrix() -> np.ndarray:
            perm = rng.permutation(n_tokens)
            W_V = np.eye(dim)
            W_V[:n_tokens, :n_tokens] = np.eye(n_tokens)[perm].T
            return W_V
    else:
        angles = 2 * math.pi * np.arange(n_tokens) / n_tokens
        vectors = np.zeros((n_tokens, dim))
        vectors[:, 0] = np.cos(angles)
        vectors[:, 1] = np.sin(angles)

        def value_matrix() -> np.ndarray:
            theta = 2 * math.pi * rng.integers(n_tokens) / n_tokens
            W_V = np.eye(dim)
            W_V[:2, :2] = [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
            return W_V

    return vectors, value_matrix


def random_instance(rng: np.random.Generator) -> RandomInstance:
    n_tokens = int(rng.integers(2, 5))
    dim = int(rng.integers(2, 5))
    d_prime = int(rng.integers(1, 4))
    depth = int(rng.integers(1, 4))
    length = int(rng.integers(1, 5))
    scaling = Scaling.INV_SQRT_D if rng.random() < 0.5 else Scaling.NONE

    vocabulary = Vocabulary([f"t{i}" for i in range(n_tokens)])
    vectors, value_matrix = _embedding_and_values(rng, n_tokens, dim)
    embedding = Embedding(vocabulary, vectors)

    blocks = []
    for _ in range(depth):
        ffn: Dict[Token, Token] = {
            token: vocabulary[int(rng.integers(n_tokens))] for token in vocabulary
        }
        blocks.append(AttentionBlock.build(
            rng.normal(size=(d_prime, dim)),
            rng.normal(size=(d_prime, dim)),
            value_matrix(),
            embedding,
            ffn,
        ))

    text = Text(tuple(vocabulary[int(i)] for i in rng.integers(n_tokens, size=length)))
    return RandomInstance(TransformerStack(tuple(blocks), scaling), embedding, text)
