"""
Tests for vocabulary, embeddings and value closure
"""

import pytest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from model.vocab import (
    ClosureViolationError,
    Embedding,
    Text,
    Token,
    UnknownTokenError,
    Vocabulary,
    VocabularyError,
    validate_value_closure,
)


@pytest.fixture
def vocab():
    return Vocabulary(['x0', 'x1'])


@pytest.fixture
def emb(vocab):
    return Embedding(vocab, np.eye(2))


class TestVocabulary:
    """Tests for Vocabulary"""

    def test_ids_follow_order(self, vocab):
        """Token ids are assigned in declaration order"""
        assert [t.id for t in vocab] == [0, 1]
        assert vocab.lookup('x1') == Token(1, 'x1')
        assert vocab.symbols == ('x0', 'x1')

    def test_unknown_symbol(self, vocab):
        """Looking up an unknown symbol raises UnknownTokenError"""
        with pytest.raises(UnknownTokenError, match="zz"):
            vocab.lookup('zz')

    def test_parse(self, vocab):
        """Whitespace-separated symbols parse into a Text"""
        text = vocab.parse('x0  x1 x0')
        assert text.symbols() == 'x0 x1 x0'
        assert text.length == 3

    def test_parse_reports_every_unknown_symbol(self, vocab):
        """All unknown symbols are listed"""
        with pytest.raises(UnknownTokenError) as exc:
            vocab.parse('x0 zz yy')
        assert len(exc.value.errors) == 2

    def test_duplicates_rejected(self):
        """Duplicate symbols are rejected"""
        with pytest.raises(VocabularyError) as exc:
            Vocabulary(['a', 'b', 'a'])
        assert exc.value.errors == ["Duplicate token symbol 'a'"]

    def test_empty_rejected(self):
        """An empty vocabulary is rejected"""
        with pytest.raises(VocabularyError):
            Vocabulary([])

    def test_membership_checks_symbol(self, vocab):
        """Tokens from another vocabulary with the same id are not members"""
        assert vocab[0] in vocab
        assert Token(0, 'other') not in vocab
        assert Token(5, 'x0') not in vocab


class TestEmbedding:
    """Tests for Embedding"""

    def test_vectors_read_only(self, emb):
        """Stored vectors cannot be modified"""
        with pytest.raises(ValueError):
            emb.vectors[0, 0] = 5.0

    def test_matrix_rows_follow_text(self, vocab, emb):
        """matrix(text) stacks the embeddings in text order"""
        X = emb.matrix(vocab.parse('x1 x0 x1'))
        np.testing.assert_array_equal(X, [[0, 1], [1, 0], [0, 1]])

    def test_row_count_must_match(self, vocab):
        """One vector per token is required"""
        with pytest.raises(VocabularyError):
            Embedding(vocab, np.eye(3))

    def test_shared_embedding_rejected(self, vocab):
        """Two tokens cannot share an embedding"""
        with pytest.raises(VocabularyError) as exc:
            Embedding(vocab, [[1.0, 0.0], [1.0, 0.0]])
        assert "share the embedding" in exc.value.errors[0]

    def test_non_finite_rejected(self, vocab):
        """NaN entries are rejected"""
        with pytest.raises(VocabularyError):
            Embedding(vocab, [[np.nan, 0.0], [0.0, 1.0]])


class TestText:
    """Tests for Text"""

    def test_empty_text_rejected(self):
        """A text needs at least one token"""
        with pytest.raises(VocabularyError):
            Text(())

    def test_extended(self, vocab):
        """extended appends one token without touching the original"""
        text = vocab.parse('x0')
        longer = text.extended(vocab.lookup('x1'))
        assert longer.symbols() == 'x0 x1'
        assert text.symbols() == 'x0'
        assert longer.last == vocab.lookup('x1')

    def test_ordering_is_lexicographic_by_id(self, vocab):
        """Texts order lexicographically by token id"""
        texts = [vocab.parse(s) for s in ('x1 x0', 'x0 x1', 'x0 x0')]
        assert [t.symbols() for t in sorted(texts)] == ['x0 x0', 'x0 x1', 'x1 x0']

    def test_check_vocabulary(self, vocab):
        """Foreign tokens are detected"""
        text = Text((Token(0, 'q'),))
        with pytest.raises(UnknownTokenError):
            text.check_vocabulary(vocab)


class TestValueClosure:
    """Tests for validate_value_closure"""

    def test_identity(self, emb):
        """The identity maps every token to itself"""
        mapping = validate_value_closure(np.eye(2), emb)
        assert {k.symbol: v.symbol for k, v in mapping.items()} == {'x0': 'x0', 'x1': 'x1'}

    def test_swap(self, emb):
        """sigma_x swaps the two tokens"""
        mapping = validate_value_closure([[0, 1], [1, 0]], emb)
        assert {k.symbol: v.symbol for k, v in mapping.items()} == {'x0': 'x1', 'x1': 'x0'}

    def test_within_tolerance(self, emb):
        """Images within 1e-9 componentwise still match"""
        validate_value_closure(np.eye(2) + 1e-10, emb)

    def test_violation(self, emb):
        """An image that is no token embedding raises ClosureViolationError"""
        with pytest.raises(ClosureViolationError) as exc:
            validate_value_closure([[2.0, 0.0], [0.0, 1.0]], emb)
        assert len(exc.value.errors) == 1
        assert "'x0'" in exc.value.errors[0]

    def test_wrong_shape(self, emb):
        """W_V must be d x d"""
        with pytest.raises(VocabularyError):
            validate_value_closure(np.eye(3), emb)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
