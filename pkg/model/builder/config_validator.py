"""
Config Validator

Validates model configuration documents (JSON or YAML) against JSON Schema at load time.
"""

import json
import logging
from pathlib import Path
from typing import List, Dict, Any, Optional, Union

import yaml
from jsonschema import Draft7Validator, ValidationError

logger = logging.getLogger(__name__)


class ConfigValidationError(Exception):
    """Raised when configuration validation fails."""

    def __init__(self, message: str, errors: List[str] = None):
        super().__init__(message)
        self.errors = errors or []

    def __str__(self) -> str:
        message = super().__str__()
        if not self.errors:
            return message
        return message + ''.join(f"\n  - {e}" for e in self.errors)


class ConfigValidator:
    """
    Validates model configuration documents against JSON Schema.

    Usage:
        validator = ConfigValidator()
        document = validator.validate_config('config/models/golden_example.json')
        # Raises ConfigValidationError if invalid

        # Or get errors as list:
        errors = validator.get_validation_errors(document)
    """

    # Default schema path relative to project root
    DEFAULT_SCHEMA_PATH = 'schemas/config/model_config.schema.json'

    def __init__(self, schema_path: Optional[str] = None):
        """
        Initialize validator with schema.

        Args:
            schema_path: Path to JSON Schema file. If None, uses default.
        """
        self._schema: Optional[Dict[str, Any]] = None
        self._schema_path = schema_path

    def _load_schema(self) -> Dict[str, Any]:
        """Load JSON Schema from file."""
        if self._schema is not None:
            return self._schema

        if self._schema_path:
            schema_path = Path(self._schema_path)
        else:
            module_dir = Path(__file__).parent.parent.parent
            schema_path = module_dir / self.DEFAULT_SCHEMA_PATH

        if not schema_path.exists():
            raise ConfigValidationError(f"Schema file not found: {schema_path}")

        with open(schema_path, 'r') as f:
            self._schema = json.load(f)

        return self._schema

    def load_document(self, path: Union[str, Path]) -> Dict[str, Any]:
        """Load a JSON or YAML configuration file (YAML is a superset of JSON)."""
        path = Path(path)

        if not path.exists():
            raise ConfigValidationError(f"Config file not found: {path}")

        with open(path, 'r') as f:
            try:
                document = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigValidationError(f"Invalid config syntax in {path}: {e}")

        if not isinstance(document, dict):
            raise ConfigValidationError(f"Config root must be an object: {path}")
        return document

    def validate_document(self, document: Dict[str, Any]) -> Dict[str, Any]:
        """
        Validate a parsed config document against the schema.

        Args:
            document: Parsed configuration

        Returns:
            The document if valid

        Raises:
            ConfigValidationError: If validation fails
        """
        errors = self.get_validation_errors(document)
        if errors:
            raise ConfigValidationError(
                f"Configuration validation failed with {len(errors)} error(s)",
                errors=errors
            )
        return document

    def validate_config(self, path: Union[str, Path]) -> Dict[str, Any]:
        """
        Load and validate a config file.

        Args:
            path: Path to JSON or YAML configuration file

        Returns:
            Parsed configuration dict if valid

        Raises:
            ConfigValidationError: If validation fails
        """
        document = self.validate_document(self.load_document(path))
        logger.info(f"Configuration validated successfully: {path}")
        return document

    def get_validation_errors(self, document: Dict[str, Any]) -> List[str]:
        """
        Get list of schema errors without raising exception.

        Args:
            document: Parsed configuration

        Returns:
            List of error messages (empty if valid)
        """
        validator = Draft7Validator(self._load_schema())
        errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
        return self._format_errors(errors)

    def _format_errors(self, errors: List[ValidationError]) -> List[str]:
        """Format validation errors into readable messages."""
        messages = []

        for error in errors:
            # Build path to error location
            path = ' → '.join(str(p) for p in error.absolute_path) or 'root'

            if error.validator == 'required':
                missing = error.message.split("'")[1] if "'" in error.message else error.message
                messages.append(f"Missing required field '{missing}' at {path}")
            elif error.validator == 'enum':
                messages.append(f"Invalid value at {path}: {error.message}")
            elif error.validator == 'type':
                messages.append(f"Wrong type at {path}: {error.message}")
            elif error.validator in ('minItems', 'minimum', 'minLength', 'pattern'):
                messages.append(f"Invalid format at {path}: {error.message}")
            else:
                messages.append(f"Validation error at {path}: {error.message}")

        return messages

    def is_valid(self, document: Dict[str, Any]) -> bool:
        """Check if a parsed configuration is valid."""
        return not self.get_validation_errors(document)
