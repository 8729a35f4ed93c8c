"""
Client Module for the Quantum Transformer Simulator

Provides Python SDK and CLI for simulation runs.
"""

from client.client import SimulationClient, run_golden_example
from client.cli import main as cli_main

__all__ = ['SimulationClient', 'run_golden_example', 'cli_main']
