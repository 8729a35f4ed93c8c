"""
Simulator Settings

Runtime defaults loaded from config/simulator_config.yaml, with environment overrides.
"""

import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS_PATH = Path(__file__).parent.parent / 'config' / 'simulator_config.yaml'


@dataclass(frozen=True)
class SimulatorSettings:
    """Runtime defaults for the harness and CLI."""
    version: str = "1.0.0"
    comparison_threshold: float = 1e-10
    trajectories: int = 100_000
    seed: int = 20240601
    chi_square_alpha: float = 0.001
    probability_digits: int = 17
    output_format: str = "json"

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> 'SimulatorSettings':
        system = config.get('system', {})
        comparison = config.get('comparison', {})
        sampling = config.get('sampling', {})
        output = config.get('output', {})
        defaults = cls()
        return cls(
            version=str(system.get('version', defaults.version)),
            comparison_threshold=float(comparison.get('threshold', defaults.comparison_threshold)),
            trajectories=int(sampling.get('trajectories', defaults.trajectories)),
            seed=int(sampling.get('seed', defaults.seed)),
            chi_square_alpha=float(sampling.get('chi_square_alpha', defaults.chi_square_alpha)),
            probability_digits=int(output.get('probability_digits', defaults.probability_digits)),
            output_format=str(output.get('format', defaults.output_format)),
        )


def load_settings(path: Optional[Union[str, Path]] = None) -> SimulatorSettings:
    """
    Load settings from YAML.

    Resolution order: explicit path, $QTSIM_SETTINGS, the bundled
    config/simulator_config.yaml. $QTSIM_THRESHOLD overrides the comparison
    threshold. A .env file in the working directory is read first.
    """
    load_dotenv()

    path = Path(path or os.getenv('QTSIM_SETTINGS') or DEFAULT_SETTINGS_PATH)
    if path.exists():
        with open(path, 'r') as f:
            settings = SimulatorSettings.from_dict(yaml.safe_load(f) or {})
        logger.debug(f"Loaded settings from {path}")
    else:
        logger.warning(f"Settings file not found: {path}; using defaults")
        settings = SimulatorSettings()

    threshold = os.getenv('QTSIM_THRESHOLD')
    if threshold:
        settings = replace(settings, comparison_threshold=float(threshold))

    return settings
