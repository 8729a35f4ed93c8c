"""
Run Manifest

Everything needed to reproduce a run, plus the deterministic JSON rendering
used for every result document.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

ARTIFACT_VERSION = "1.0.0"


def config_digest(document: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a model config document."""
    canonical = json.dumps(document, sort_keys=True, separators=(',', ':'), ensure_ascii=False)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Inputs that pin down a run bit for bit."""
    config_digest: str
    input_text: str
    scaling: str
    truncation: int
    seed: Optional[int]
    artifact_version: str = ARTIFACT_VERSION
    command: str = "run"
    mode: Optional[str] = None
    trajectories: Optional[int] = None
    threshold: Optional[float] = None
    max_block: Optional[int] = None

    @classmethod
    def from_run(
        cls,
        document: Dict[str, Any],
        input_text: str,
        scaling: str,
        truncation: int,
        seed: Optional[int] = None,
        command: str = "run",
        mode: Optional[str] = None,
        trajectories: Optional[int] = None,
        threshold: Optional[float] = None,
        max_block: Optional[int] = None
    ) -> 'RunManifest':
        return cls(
            config_digest=config_digest(document),
            input_text=input_text,
            scaling=scaling,
            truncation=truncation,
            seed=seed,
            command=command,
            mode=mode,
            trajectories=trajectories,
            threshold=threshold,
            max_block=max_block,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def format_number(value: float, digits: int = 17) -> str:
    """Decimal rendering with `digits` significant digits (17 round-trips any float64)."""
    if isinstance(value, bool) or isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        raise ValueError(f"Cannot serialize non-finite value {value!r}")
    return format(value, f'.{digits}g')


def serialize_document(document: Any, digits: int = 17, indent: int = 2) -> str:
    """
    Render a result document as JSON.

    Object keys are sorted, floats carry `digits` significant digits, so the
    same inputs always produce byte-identical output.
    """

    def render(value: Any, level: int) -> str:
        pad = ' ' * (indent * (level + 1))
        close = ' ' * (indent * level)
        if isinstance(value, dict):
            if not value:
                return '{}'
            items = [
                f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {render(v, level + 1)}"
                for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))
            ]
            return '{\n' + ',\n'.join(items) + '\n' + close + '}'
        if isinstance(value, (list, tuple)):
            if not value:
                return '[]'
            items = [f"{pad}{render(v, level + 1)}" for v in value]
            return '[\n' + ',\n'.join(items) + '\n' + close + ']'
        if isinstance(value, float):
            return format_number(value, digits)
        if value is None or isinstance(value, (bool, int, str)):
            return json.dumps(value, ensure_ascii=False)
        raise TypeError(f"Cannot serialize {type(value).__name__}")

    return render(document, 0) + '\n'
