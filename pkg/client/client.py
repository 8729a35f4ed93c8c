"""
Python SDK Client for the Quantum Transformer Simulator

Loads a model once and runs the classical reference, the sequential
measurement protocol, their comparison, sampling, and CPTP witnesses.
Every method returns a result document {"manifest", "distribution", "report"}.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
import yaml

from harness.compare import ComparisonReport, chi_square_check, compare
from harness.golden import golden_example
from harness.manifest import RunManifest, serialize_document
from harness.settings import SimulatorSettings, load_settings
from model.builder.model_factory import LoadedModel, ModelFactory
from model.builder.model_registry import GOLDEN_EXAMPLE_INPUT, ModelRegistry
from model.transformer import JointDistribution, joint_distribution
from model.vocab import Text
from quantum.channel import build_channels, choi_matrix, choi_trace_defect, kraus_operators, verify_cp
from quantum.fock import FockSpace
from quantum.protocol import run_protocol, sample_protocol

logger = logging.getLogger(__name__)

WITNESS_TOLERANCE = 1e-10

MODES = ('classical', 'quantum', 'compare')


class SimulationClient:
    """
    Client for simulation runs on one model

    Example:
        client = SimulationClient(config_path="config/models/golden_example.json")
        result = client.run("x0 x1 x0", mode="compare")
        client.save_results(result, "result.json")
    """

    def __init__(
        self,
        config_path: Optional[Union[str, Path]] = None,
        document: Optional[Dict[str, Any]] = None,
        settings: Optional[SimulatorSettings] = None
    ):
        """
        Initialize simulation client

        Args:
            config_path: Model config file (JSON or YAML)
            document: Parsed model config; used when config_path is None
            settings: Runtime settings (default: load_settings())
        """
        self.settings = settings or load_settings()
        factory = ModelFactory()

        if config_path is not None:
            document = factory.validator.load_document(config_path)
        elif document is None:
            raise ValueError("Either config_path or document is required")

        self.document = document
        self.model: LoadedModel = factory.create_from_document(document)
        logger.info(f"Simulation client ready ({len(self.model.vocabulary)} tokens, depth {len(self.model.blocks)})")

    @classmethod
    def for_builtin(cls, name: str, settings: Optional[SimulatorSettings] = None) -> 'SimulationClient':
        """Client for a model from the ModelRegistry."""
        return cls(document=ModelRegistry().get_document(name), settings=settings)

    @property
    def scaling(self) -> str:
        return self.model.conventions.scaling.value

    def parse_input(self, source: str) -> Text:
        return self.model.vocabulary.parse(source)

    def run_classical(self, text: Text) -> JointDistribution:
        return joint_distribution(self.model.stack, text, self.model.embedding)

    def run_quantum(self, text: Text) -> JointDistribution:
        return run_protocol(self.model.stack, text, self.model.embedding, self.model.conventions.vacuum_token)

    def run_compare(self, text: Text) -> ComparisonReport:
        """Classical reference against the sequential measurement, outcome by outcome."""
        return compare(self.run_classical(text), self.run_quantum(text))

    def _manifest(self, text: Text, command: str, mode: Optional[str] = None, **recorded: Any) -> RunManifest:
        return RunManifest.from_run(
            self.document,
            input_text=text.symbols(),
            scaling=self.scaling,
            truncation=text.length + len(self.model.blocks),
            command=command,
            mode=mode,
            **recorded,
        )

    def run(self, source: str, mode: str = 'compare', threshold: Optional[float] = None) -> Dict[str, Any]:
        """
        Exact joint distribution by the classical path, the quantum path, or both

        Args:
            source: Input text as space-separated symbols
            mode: classical | quantum | compare
            threshold: Maximum total variation for compare (default from settings)

        Returns:
            Result document; report['passed'] is False when compare exceeds the threshold
        """
        if mode not in MODES:
            raise ValueError(f"Unknown mode '{mode}' (expected one of {', '.join(MODES)})")
        text = self.parse_input(source)
        threshold = self.settings.comparison_threshold if threshold is None else threshold
        logger.info(f"Running {mode} on '{text.symbols()}'")

        if mode == 'classical':
            joint = self.run_classical(text)
            report = {'outcomes': len(joint), 'total': joint.total(), 'passed': True}
        elif mode == 'quantum':
            joint = self.run_quantum(text)
            report = {'outcomes': len(joint), 'total': joint.total(), 'passed': True}
        else:
            joint = self.run_quantum(text)
            comparison = compare(self.run_classical(text), joint)
            report = comparison.to_dict()
            report['threshold'] = threshold
            report['passed'] = comparison.passed(threshold)
            logger.info(f"Total variation {comparison.total_variation:.3e} (threshold {threshold:g})")

        return {
            'manifest': self._manifest(
                text, 'run', mode, threshold=threshold if mode == 'compare' else None
            ).to_dict(),
            'distribution': joint.by_symbols(),
            'report': report,
        }

    def sample(self, source: str, trajectories: Optional[int] = None, seed: Optional[int] = None) -> Dict[str, Any]:
        """
        Monte-Carlo sequential measurement with a chi-square check against the exact joint

        Args:
            source: Input text
            trajectories: Number of trajectories (default from settings)
            seed: Root seed (default from settings)
        """
        text = self.parse_input(source)
        trajectories = self.settings.trajectories if trajectories is None else trajectories
        seed = self.settings.seed if seed is None else seed
        logger.info(f"Sampling {trajectories} trajectories on '{text.symbols()}' (seed {seed})")

        counts = sample_protocol(
            self.model.stack, text, self.model.embedding, seed, trajectories,
            self.model.conventions.vacuum_token
        )
        chi_square = chi_square_check(counts, self.run_quantum(text), self.settings.chi_square_alpha)

        return {
            'manifest': self._manifest(text, 'sample', seed=seed, trajectories=trajectories).to_dict(),
            'distribution': {t.symbols(): c / trajectories for t, c in counts.items()},
            'report': {
                'trajectories': trajectories,
                'counts': {t.symbols(): c for t, c in counts.items()},
                'chi_square': chi_square.to_dict(),
                'passed': chi_square.passed,
            },
        }

    def choi_report(self, max_block: int) -> Dict[str, Any]:
        """
        CPTP witnesses for every block's channel restricted to blocks 0..max_block

        Reports the Choi minimum eigenvalue, the Kraus completeness defect and
        the Choi trace defect; each must stay within 1e-10.
        """
        space = FockSpace(len(self.model.vocabulary), max_block + 1)
        channels = build_channels(self.model.stack, self.model.embedding, space, self.model.conventions.vacuum_token)

        rows: List[Dict[str, Any]] = []
        for index, channel in enumerate(channels, start=1):
            kraus = kraus_operators(channel, max_block)
            min_eigenvalue = verify_cp(kraus)
            completeness = kraus.completeness_defect()
            trace_defect = choi_trace_defect(choi_matrix(kraus), kraus.input_dimension, kraus.output_dimension)
            rows.append({
                'block': index,
                'kraus_operators': len(kraus),
                'input_dimension': kraus.input_dimension,
                'output_dimension': kraus.output_dimension,
                'min_eigenvalue': min_eigenvalue,
                'completeness_defect': completeness,
                'trace_defect': trace_defect,
                'passed': min_eigenvalue >= -WITNESS_TOLERANCE
                and completeness <= WITNESS_TOLERANCE
                and trace_defect <= WITNESS_TOLERANCE,
            })
            logger.info(f"Block {index}: min eigenvalue {min_eigenvalue:.3e}, completeness defect {completeness:.3e}")

        manifest = RunManifest.from_run(
            self.document, input_text='', scaling=self.scaling,
            truncation=space.truncation, command='choi', max_block=max_block
        )
        return {
            'manifest': manifest.to_dict(),
            'distribution': {},
            'report': {'max_block': max_block, 'blocks': rows, 'passed': all(r['passed'] for r in rows)},
        }

    def render(self, results: Dict[str, Any]) -> str:
        """Deterministic JSON text of a result document."""
        return serialize_document(results, digits=self.settings.probability_digits)

    def save_results(self, results: Dict[str, Any], output_path: str, format: str = 'json') -> None:
        """
        Save results to file

        Args:
            results: Result document
            output_path: Path to save results
            format: Output format (json, yaml, csv); csv writes the distribution table
        """
        logger.info(f"Saving results to: {output_path}")

        if format == 'json':
            Path(output_path).write_text(self.render(results))
        elif format == 'yaml':
            # round-trip through the canonical JSON so numbers match the json output
            with open(output_path, 'w') as f:
                yaml.safe_dump(json.loads(self.render(results)), f, sort_keys=True)
        elif format == 'csv':
            table = pd.DataFrame(
                sorted(results['distribution'].items()), columns=['outcome', 'probability']
            )
            table.to_csv(output_path, index=False, float_format=f'%.{self.settings.probability_digits}g')
        else:
            raise ValueError(f"Unsupported format: {format}")

        logger.info("Results saved successfully")


def run_golden_example(settings: Optional[SimulatorSettings] = None) -> Dict[str, Any]:
    """Result document for the built-in worked example."""
    client = SimulationClient.for_builtin('golden_example', settings=settings)
    text = client.parse_input(GOLDEN_EXAMPLE_INPUT)
    report = golden_example()
    return {
        'manifest': client._manifest(text, 'example', 'compare').to_dict(),
        'distribution': client.run_quantum(text).by_symbols(),
        'report': report.to_dict(),
    }
