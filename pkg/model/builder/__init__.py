"""
Model Builder Module

Provides components for loading transformer models from configuration:
- ConfigValidator: Validate JSON/YAML model configs against JSON Schema
- ModelFactory: Build validated vocabulary, embedding and attention blocks
- ModelRegistry: Built-in, sample and runtime-registered model documents
"""

from .config_validator import ConfigValidator, ConfigValidationError
from .model_factory import LoadedModel, ModelConventions, ModelFactory, load_model_config
from .model_registry import GOLDEN_EXAMPLE, GOLDEN_EXAMPLE_INPUT, ModelRegistry

__all__ = [
    # Config validation
    'ConfigValidator',
    'ConfigValidationError',
    # Model creation
    'ModelFactory',
    'LoadedModel',
    'ModelConventions',
    'load_model_config',
    # Model documents
    'ModelRegistry',
    'GOLDEN_EXAMPLE',
    'GOLDEN_EXAMPLE_INPUT',
]
