"""
Tests for the Quantum Transformer Simulator
"""
