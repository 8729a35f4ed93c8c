"""
Model Registry

Manages model configuration documents: built-in models shipped in code,
sample configs under config/models, and models registered at runtime.
"""

import json
import logging
from copy import deepcopy
from pathlib import Path
from typing import Any, Dict, List, Optional

from .model_factory import LoadedModel, ModelFactory

logger = logging.getLogger(__name__)

_IDENTITY = [[1.0, 0.0], [0.0, 1.0]]
_SIGMA_X = [[0.0, 1.0], [1.0, 0.0]]

# Two tokens x0=(1,0), x1=(0,1); block 1 has W_K = sigma_x, block 2 has W_V = sigma_x.
GOLDEN_EXAMPLE = {
    "embedding_dim": 2,
    "tokens": [
        {"symbol": "x0", "embedding": [1.0, 0.0]},
        {"symbol": "x1", "embedding": [0.0, 1.0]}
    ],
    "scaling": "none",
    "phi_vacuum_token": "x0",
    "blocks": [
        {"W_Q": _IDENTITY, "W_K": _SIGMA_X, "W_V": _IDENTITY, "ffn": {"x0": "x0", "x1": "x1"}},
        {"W_Q": _IDENTITY, "W_K": _IDENTITY, "W_V": _SIGMA_X, "ffn": {"x0": "x0", "x1": "x1"}}
    ]
}

GOLDEN_EXAMPLE_INPUT = "x0 x1 x0"


class ModelRegistry:
    """
    Registry for model configuration documents.

    Supports:
    - Built-in models embedded in code (golden_example)
    - Sample configs auto-loaded from config/models/*.json
    - Runtime registration, optionally overriding fields of another model

    Usage:
        registry = ModelRegistry()

        # Get a built-in document
        document = registry.get_document('golden_example')

        # Build a validated model
        model = registry.load('golden_example')

        # Register a variant with the 1/sqrt(d) convention
        registry.register_model('golden_scaled', {'scaling': 'inv_sqrt_d'}, extends='golden_example')
    """

    BUILTIN_MODELS = {'golden_example': GOLDEN_EXAMPLE}

    def __init__(self, models_dir: Optional[str] = None, factory: Optional[ModelFactory] = None):
        """
        Initialize model registry.

        Args:
            models_dir: Directory of sample model configs. If None, auto-detects.
            factory: Model factory used by load()
        """
        self._documents: Dict[str, Dict[str, Any]] = deepcopy(self.BUILTIN_MODELS)
        self._models_dir = self._resolve_models_dir(models_dir)
        self._factory = factory or ModelFactory()

    def _resolve_models_dir(self, models_dir: Optional[str]) -> Path:
        if models_dir:
            return Path(models_dir)
        return Path(__file__).parent.parent.parent / 'config' / 'models'

    def sample_path(self, name: str) -> Path:
        return self._models_dir / f'{name}.json'

    def load_sample(self, name: str) -> Dict[str, Any]:
        """Read a sample config file from the models directory."""
        path = self.sample_path(name)
        if not path.exists():
            raise FileNotFoundError(f"Sample model config not found: {path}")
        with open(path, 'r') as f:
            return json.load(f)

    def register_model(self, name: str, document: Dict[str, Any], extends: Optional[str] = None) -> None:
        """
        Register a model document.

        Args:
            name: Model identifier
            document: Config document (or partial document when extending)
            extends: Optional model whose top-level fields the document overrides
        """
        if extends:
            if not self.has_model(extends):
                raise ValueError(f"Parent model '{extends}' not found")
            merged = self.get_document(extends)
            merged.update(deepcopy(document))
            document = merged

        self._documents[name] = deepcopy(document)
        logger.info(f"Registered model: {name}" + (f" (extends {extends})" if extends else ""))

    def get_document(self, name: str) -> Dict[str, Any]:
        """
        Get a model document by name.

        Raises:
            KeyError: If model not found
        """
        if name not in self._documents:
            if self.sample_path(name).exists():
                self._documents[name] = self.load_sample(name)
                logger.debug(f"Loaded sample model: {name}")
            else:
                raise KeyError(f"Model not found: {name}")
        return deepcopy(self._documents[name])

    def has_model(self, name: str) -> bool:
        return name in self._documents or self.sample_path(name).exists()

    def list_models(self) -> List[str]:
        """List all known model names."""
        names = set(self._documents)
        if self._models_dir.exists():
            names.update(p.stem for p in self._models_dir.glob('*.json'))
        return sorted(names)

    def load(self, name: str) -> LoadedModel:
        """Build the validated model for a registered name."""
        return self._factory.create_from_document(self.get_document(name))
