"""
Model Factory

Creates validated transformer models from configuration documents.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from model.transformer import AttentionBlock, DimensionMismatchError, Scaling, TransformerStack
from model.vocab import (
    ClosureViolationError,
    Embedding,
    Token,
    Vocabulary,
    VocabularyError,
)
from .config_validator import ConfigValidator, ConfigValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConventions:
    """Model-level conventions that are not part of any block."""
    scaling: Scaling = Scaling.INV_SQRT_D
    vacuum_token: Optional[Token] = None


class LoadedModel(NamedTuple):
    """A fully validated model: unpacks as (vocabulary, embedding, blocks, conventions)."""
    vocabulary: Vocabulary
    embedding: Embedding
    blocks: List[AttentionBlock]
    conventions: ModelConventions

    @property
    def stack(self) -> TransformerStack:
        return TransformerStack(tuple(self.blocks), self.conventions.scaling)


class ModelFactory:
    """
    Factory for building transformer models from configuration.

    Every check runs before anything is returned; all problems found are
    reported together in one ConfigValidationError.

    Usage:
        factory = ModelFactory()

        # Create from parsed document
        model = factory.create_from_document(document)

        # Create from JSON/YAML file
        model = factory.create_from_file('config/models/golden_example.json')
    """

    def __init__(self, validator: Optional[ConfigValidator] = None):
        """
        Initialize model factory.

        Args:
            validator: Schema validator (default: bundled model config schema)
        """
        self.validator = validator or ConfigValidator()

    def create_from_file(self, path: Union[str, Path]) -> LoadedModel:
        """Load, validate and build a model from a config file."""
        document = self.validator.load_document(path)
        logger.info(f"Loading model config: {path}")
        return self.create_from_document(document)

    def create_from_document(self, document: Dict[str, Any]) -> LoadedModel:
        """
        Build a model from a parsed config document.

        Args:
            document: Config matching schemas/config/model_config.schema.json

        Returns:
            LoadedModel

        Raises:
            ConfigValidationError: On schema, shape, symbol, finiteness or closure problems
        """
        self.validator.validate_document(document)

        d = document['embedding_dim']
        vocabulary, embedding = self._build_vocabulary(document['tokens'], d)

        errors: List[str] = []
        blocks = []
        for index, block_doc in enumerate(document['blocks']):
            block = self._build_block(index, block_doc, embedding, errors)
            if block is not None:
                blocks.append(block)

        if errors:
            raise ConfigValidationError(
                f"Model configuration is invalid ({len(errors)} error(s))",
                errors=errors
            )

        conventions = ModelConventions(
            scaling=Scaling(document.get('scaling', Scaling.INV_SQRT_D.value)),
            vacuum_token=self._resolve_vacuum(document, vocabulary)
        )

        logger.info(
            f"Model ready: N={len(vocabulary)}, d={d}, L={len(blocks)}, "
            f"scaling={conventions.scaling.value}, vacuum={conventions.vacuum_token.symbol}"
        )
        return LoadedModel(vocabulary, embedding, blocks, conventions)

    def _build_vocabulary(self, tokens: List[Dict[str, Any]], d: int) -> Tuple[Vocabulary, Embedding]:
        errors = []
        for token in tokens:
            vector = token['embedding']
            if len(vector) != d:
                errors.append(
                    f"Token '{token['symbol']}' has an embedding of length {len(vector)}, expected {d}"
                )
            if not all(math.isfinite(v) for v in vector):
                errors.append(f"Token '{token['symbol']}' has non-finite embedding entries")
        if errors:
            raise ConfigValidationError("Invalid token table", errors=errors)

        try:
            vocabulary = Vocabulary([t['symbol'] for t in tokens])
            embedding = Embedding(vocabulary, np.array([t['embedding'] for t in tokens], dtype=float))
        except VocabularyError as e:
            raise ConfigValidationError(str(e), errors=e.errors or [str(e)])
        return vocabulary, embedding

    def _build_block(
        self,
        index: int,
        block_doc: Dict[str, Any],
        embedding: Embedding,
        errors: List[str]
    ) -> Optional[AttentionBlock]:
        d = embedding.dim
        where = f"blocks → {index}"
        found = len(errors)

        matrices = {}
        for name in ('W_Q', 'W_K', 'W_V'):
            rows = block_doc[name]
            widths = {len(r) for r in rows}
            if widths != {d}:
                errors.append(f"{name} at {where} must have rows of length {d}, got {sorted(widths)}")
                continue
            matrix = np.array(rows, dtype=float)
            if not np.all(np.isfinite(matrix)):
                errors.append(f"{name} at {where} has non-finite entries")
                continue
            matrices[name] = matrix

        if 'W_Q' in matrices and 'W_K' in matrices \
                and matrices['W_Q'].shape[0] != matrices['W_K'].shape[0]:
            errors.append(
                f"W_Q and W_K at {where} must have the same number of rows d', "
                f"got {matrices['W_Q'].shape[0]} and {matrices['W_K'].shape[0]}"
            )
        if 'W_V' in matrices and matrices['W_V'].shape != (d, d):
            errors.append(f"W_V at {where} must be {d}x{d}, got {matrices['W_V'].shape}")

        ffn = {}
        vocabulary = embedding.vocabulary
        for source, target in block_doc.get('ffn', {}).items():
            for symbol in (source, target):
                if symbol not in vocabulary.symbols:
                    errors.append(f"Unknown token symbol '{symbol}' in FFN table at {where}")
            if source in vocabulary.symbols and target in vocabulary.symbols:
                ffn[vocabulary.lookup(source)] = vocabulary.lookup(target)

        if len(errors) > found:
            return None

        try:
            return AttentionBlock.build(
                matrices['W_Q'], matrices['W_K'], matrices['W_V'], embedding, ffn
            )
        except ClosureViolationError as e:
            errors.extend(f"{msg} (at {where})" for msg in e.errors)
        except (VocabularyError, DimensionMismatchError) as e:
            errors.append(f"{e} (at {where})")
        return None

    def _resolve_vacuum(self, document: Dict[str, Any], vocabulary: Vocabulary) -> Token:
        symbol = document.get('phi_vacuum_token')
        if symbol is None:
            return vocabulary[0]
        if symbol not in vocabulary.symbols:
            raise ConfigValidationError(
                "Invalid vacuum token",
                errors=[f"Unknown token symbol '{symbol}' in phi_vacuum_token"]
            )
        return vocabulary.lookup(symbol)


def load_model_config(document: Dict[str, Any]) -> LoadedModel:
    """Validate a config document and return (vocabulary, embedding, blocks, conventions)."""
    return ModelFactory().create_from_document(document)
