"""
Vocabulary

Tokens, their real embeddings, and texts built from them.

The token Hilbert-space basis {|x>} is abstract and orthonormal; embeddings
only ever enter through similarity scores.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Componentwise absolute tolerance for matching W^V x against token embeddings
CLOSURE_TOLERANCE = 1e-9


class VocabularyError(ValueError):
    """Raised when tokens, embeddings or texts are inconsistent."""

    def __init__(self, message: str, errors: List[str] = None):
        super().__init__(message)
        self.errors = errors or []


class UnknownTokenError(VocabularyError):
    """Raised when a symbol is not part of the vocabulary."""


class ClosureViolationError(VocabularyError):
    """Raised when W^V does not map every token embedding onto a token embedding."""


@dataclass(frozen=True, order=True)
class Token:
    """A vocabulary element. Ordering follows the token id."""
    id: int
    symbol: str = field(compare=False)

    def __str__(self) -> str:
        return self.symbol


class Vocabulary:
    """
    Finite token set T with ids 0..N-1 bijective with symbols.

    Usage:
        vocab = Vocabulary(['x0', 'x1'])
        x1 = vocab.lookup('x1')
        text = vocab.parse('x0 x1 x0')
    """

    def __init__(self, symbols: Sequence[str]):
        symbols = list(symbols)
        if not symbols:
            raise VocabularyError("Vocabulary needs at least one token")

        duplicates = sorted({s for s in symbols if symbols.count(s) > 1})
        if duplicates:
            raise VocabularyError(
                f"Duplicate token symbols: {', '.join(duplicates)}",
                errors=[f"Duplicate token symbol '{s}'" for s in duplicates]
            )

        self._tokens: Tuple[Token, ...] = tuple(Token(i, s) for i, s in enumerate(symbols))
        self._by_symbol: Dict[str, Token] = {t.symbol: t for t in self._tokens}

    def __len__(self) -> int:
        return len(self._tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self._tokens)

    def __getitem__(self, token_id: int) -> Token:
        return self._tokens[token_id]

    def __contains__(self, token: object) -> bool:
        return (
            isinstance(token, Token)
            and 0 <= token.id < len(self._tokens)
            and self._tokens[token.id].symbol == token.symbol
        )

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.symbols == other.symbols

    def __hash__(self) -> int:
        return hash(self.symbols)

    def __repr__(self) -> str:
        return f"Vocabulary({list(self.symbols)!r})"

    @property
    def symbols(self) -> Tuple[str, ...]:
        return tuple(t.symbol for t in self._tokens)

    def lookup(self, symbol: str) -> Token:
        """Get the token for a symbol."""
        try:
            return self._by_symbol[symbol]
        except KeyError:
            raise UnknownTokenError(
                f"Unknown token symbol '{symbol}' (known: {', '.join(self.symbols)})"
            ) from None

    def parse(self, source: str) -> 'Text':
        """Parse a whitespace-separated string of symbols into a Text."""
        symbols = source.split()
        unknown = [s for s in symbols if s not in self._by_symbol]
        if unknown:
            raise UnknownTokenError(
                f"Unknown token symbol(s) in input: {', '.join(unknown)}",
                errors=[f"Unknown token symbol '{s}'" for s in unknown]
            )
        return Text(tuple(self._by_symbol[s] for s in symbols))


@dataclass(frozen=True)
class Embedding:
    """
    The map t -> x in R^d.

    vectors[i] is the embedding of the token with id i. The array is stored
    read-only so the value can be shared freely.
    """
    vocabulary: Vocabulary
    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float)
        errors = []

        if vectors.ndim != 2 or vectors.shape[0] != len(self.vocabulary):
            raise VocabularyError(
                f"Embedding must have one vector per token: expected {len(self.vocabulary)} rows, "
                f"got shape {vectors.shape}"
            )
        if vectors.shape[1] < 1:
            errors.append("Embedding dimension must be positive")
        if not np.all(np.isfinite(vectors)):
            errors.append("Embedding vectors contain non-finite entries")

        for i in range(len(vectors)):
            for j in range(i + 1, len(vectors)):
                if np.array_equal(vectors[i], vectors[j]):
                    errors.append(
                        f"Tokens '{self.vocabulary[i].symbol}' and '{self.vocabulary[j].symbol}' "
                        f"share the embedding {vectors[i].tolist()}"
                    )

        if errors:
            raise VocabularyError(f"Invalid embedding ({len(errors)} error(s))", errors=errors)

        vectors.setflags(write=False)
        object.__setattr__(self, 'vectors', vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def matrix(self, text: 'Text') -> np.ndarray:
        """Rows are the embeddings of the text's tokens, in order (n x d)."""
        return self.vectors[[t.id for t in text.tokens]]


@dataclass(frozen=True)
class Text:
    """A nonempty finite token sequence x_1 ... x_n."""
    tokens: Tuple[Token, ...]

    def __post_init__(self):
        tokens = tuple(self.tokens)
        if not tokens:
            raise VocabularyError("A text needs at least one token")
        object.__setattr__(self, 'tokens', tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __lt__(self, other: 'Text') -> bool:
        return self.tokens < other.tokens

    @property
    def length(self) -> int:
        return len(self.tokens)

    @property
    def last(self) -> Token:
        return self.tokens[-1]

    def extended(self, token: Token) -> 'Text':
        return Text(self.tokens + (token,))

    def symbols(self) -> str:
        """Space-joined symbols, the key format used in result documents."""
        return ' '.join(t.symbol for t in self.tokens)

    def check_vocabulary(self, vocabulary: Vocabulary) -> None:
        stray = [t for t in self.tokens if t not in vocabulary]
        if stray:
            raise UnknownTokenError(
                f"Text contains tokens outside the vocabulary: {', '.join(map(repr, stray))}"
            )


def validate_value_closure(W_V: np.ndarray, emb: Embedding) -> Dict[Token, Token]:
    """
    Check that W^V maps every token embedding onto a token embedding.

    Args:
        W_V: d x d value matrix with finite entries
        emb: Token embedding

    Returns:
        Map x -> token whose embedding equals W^V emb(x) componentwise within 1e-9

    Raises:
        ClosureViolationError: If some image matches no token, or more than one
    """
    W_V = np.asarray(W_V, dtype=float)
    if W_V.shape != (emb.dim, emb.dim):
        raise VocabularyError(
            f"W_V must be {emb.dim}x{emb.dim}, got {W_V.shape[0]}x{W_V.shape[1] if W_V.ndim > 1 else 1}"
        )

    images = emb.vectors @ W_V.T
    token_map: Dict[Token, Token] = {}
    errors = []

    for token in emb.vocabulary:
        image = images[token.id]
        matches = np.flatnonzero(
            np.all(np.abs(emb.vectors - image) <= CLOSURE_TOLERANCE, axis=1)
        )
        if len(matches) == 0:
            errors.append(
                f"W_V maps '{token.symbol}' to {image.tolist()}, which is no token embedding"
            )
        elif len(matches) > 1:
            symbols = ', '.join(emb.vocabulary[int(m)].symbol for m in matches)
            errors.append(f"W_V image of '{token.symbol}' is ambiguous between: {symbols}")
        else:
            token_map[token] = emb.vocabulary[int(matches[0])]

    if errors:
        raise ClosureViolationError(
            f"Value matrix is not closed on the vocabulary ({len(errors)} violation(s))",
            errors=errors
        )

    logger.debug(
        "Value closure: " + ', '.join(f"{k.symbol}->{v.symbol}" for k, v in token_map.items())
    )
    return token_map
