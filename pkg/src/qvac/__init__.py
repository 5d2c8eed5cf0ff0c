"""Nonequilibrium quantum-vacuum forces and torques on two-material bodies.

Natural units (eV, hbar = c = k_B = 1) are used internally; results carry
SI values alongside.  See :mod:`qvac.cli` for the scenario runner.
"""
__version__ = "0.1.0"
