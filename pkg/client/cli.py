"""
Command Line Interface for the Quantum Transformer Simulator

Exit codes: 0 on success, 1 on validation errors, 2 when a comparison,
golden check, sampling check or CPTP witness fails.
"""

import sys
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from client.client import MODES, SimulationClient, run_golden_example
from model.builder.config_validator import ConfigValidationError
from model.transformer import DimensionMismatchError
from model.vocab import UnknownTokenError, VocabularyError
from quantum.fock import DimensionGuardError, TruncationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CHECK_FAILED = 2


def _emit(client: SimulationClient, result: Dict[str, Any], args) -> None:
    """Write the result document to --output, or print it."""
    if args.output:
        client.save_results(result, args.output, args.format or client.settings.output_format)
    else:
        print(client.render(result), end='')


def _status(result: Dict[str, Any]) -> int:
    return EXIT_OK if result['report']['passed'] else EXIT_CHECK_FAILED


def run_command(args) -> int:
    """Handle run command"""
    client = SimulationClient(config_path=args.config)
    result = client.run(args.input, mode=args.mode, threshold=args.threshold)
    _emit(client, result, args)

    if not result['report']['passed']:
        logger.error(
            f"Comparison failed: total variation {result['report']['total_variation']:.3e} "
            f"exceeds {result['report']['threshold']:g}"
        )
    return _status(result)


def sample_command(args) -> int:
    """Handle sample command"""
    client = SimulationClient(config_path=args.config)
    result = client.sample(args.input, trajectories=args.trajectories, seed=args.seed)
    _emit(client, result, args)

    chi_square = result['report']['chi_square']
    if not result['report']['passed']:
        logger.error(f"Chi-square check failed: statistic {chi_square['statistic']} >= {chi_square['critical_value']}")
    else:
        logger.info(f"Chi-square {chi_square['statistic']:.4f} on {chi_square['degrees_of_freedom']} df")
    return _status(result)


def example_command(args) -> int:
    """Handle example command"""
    result = run_golden_example()
    report = result['report']

    print(f"{'check':<20} {'expected':>22} {'observed':>22} {'error':>10}")
    for check in report['checks']:
        mark = 'ok' if check['passed'] else 'FAIL'
        print(
            f"{check['name']:<20} {check['expected']:>22.17g} {check['observed']:>22.17g} "
            f"{check['error']:>10.2e} {mark}"
        )
    tv = report['classical_vs_quantum']['total_variation']
    print(f"classical vs quantum total variation: {tv:.3e}")

    if args.output:
        SimulationClient.for_builtin('golden_example').save_results(result, args.output, args.format or 'json')

    if not report['passed']:
        logger.error("Golden example failed")
    return _status(result)


def choi_command(args) -> int:
    """Handle choi command"""
    client = SimulationClient(config_path=args.config)
    result = client.choi_report(args.max_block)
    _emit(client, result, args)

    for row in result['report']['blocks']:
        if not row['passed']:
            logger.error(
                f"Block {row['block']} is not CPTP on blocks <= {args.max_block}: "
                f"min eigenvalue {row['min_eigenvalue']:.3e}, "
                f"completeness defect {row['completeness_defect']:.3e}"
            )
    return _status(result)


def _add_output_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        '--output', '-o',
        help='Output file path (default: print JSON to stdout)'
    )
    parser.add_argument(
        '--format',
        choices=['json', 'yaml', 'csv'],
        help='Output format (default from settings)'
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='sim',
        description='Quantum Transformer Simulator - decoder-only transformers as quantum channels'
    )
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')

    subparsers = parser.add_subparsers(dest='command', help='Command to execute')

    # Run command
    run_parser = subparsers.add_parser(
        'run',
        help='Exact joint distribution of the generated tokens'
    )
    run_parser.add_argument('--config', required=True, help='Model config file (JSON or YAML)')
    run_parser.add_argument('--input', required=True, help='Input text as space-separated token symbols')
    run_parser.add_argument('--mode', choices=MODES, default='compare', help='Computation path')
    run_parser.add_argument(
        '--threshold',
        type=float,
        help='Maximum total variation for --mode compare (default from settings)'
    )
    _add_output_options(run_parser)
    run_parser.set_defaults(func=run_command)

    # Sample command
    sample_parser = subparsers.add_parser(
        'sample',
        help='Monte-Carlo sequential measurement'
    )
    sample_parser.add_argument('--config', required=True, help='Model config file (JSON or YAML)')
    sample_parser.add_argument('--input', required=True, help='Input text as space-separated token symbols')
    sample_parser.add_argument('--trajectories', type=int, help='Number of trajectories (default from settings)')
    sample_parser.add_argument('--seed', type=int, help='Root seed (default from settings)')
    _add_output_options(sample_parser)
    sample_parser.set_defaults(func=sample_command)

    # Example command
    example_parser = subparsers.add_parser(
        'example',
        help='Reproduce the two-token worked example'
    )
    _add_output_options(example_parser)
    example_parser.set_defaults(func=example_command)

    # Choi command
    choi_parser = subparsers.add_parser(
        'choi',
        help='CPTP witnesses of every block channel'
    )
    choi_parser.add_argument('--config', required=True, help='Model config file (JSON or YAML)')
    choi_parser.add_argument('--max-block', type=int, required=True, help='Largest input block B')
    _add_output_options(choi_parser)
    choi_parser.set_defaults(func=choi_command)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.INFO,
        format='%(levelname)s: %(message)s'
    )

    if not hasattr(args, 'func'):
        parser.print_help()
        return EXIT_VALIDATION

    try:
        return args.func(args)
    except ConfigValidationError as e:
        logger.error(f"Invalid model config: {e}")
    except UnknownTokenError as e:
        logger.error(f"Unknown token in input: {e}")
    except VocabularyError as e:
        logger.error(f"Vocabulary error: {e}")
    except TruncationError as e:
        logger.error(f"Truncation overflow: {e}")
    except DimensionGuardError as e:
        logger.error(f"Dense representation too large: {e}")
    except DimensionMismatchError as e:
        logger.error(f"Dimension mismatch: {e}")
    except FileNotFoundError as e:
        logger.error(f"File not found: {e}")
    except Exception as e:
        logger.error(f"Error: {e}")
        if args.debug:
            import traceback
            traceback.print_exc()
    return EXIT_VALIDATION


if __name__ == '__main__':
    sys.exit(main())
