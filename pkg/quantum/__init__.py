"""
Quantum Simulation

Truncated Fock space, the per-block quantum channels, the token PVM and
the sequential measurement protocol.
"""
