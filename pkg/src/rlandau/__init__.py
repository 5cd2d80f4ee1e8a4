"""Deterministic numerical toolkit for the relativistic Landau equation.

Implements the collision kernel machinery, Juttner equilibria, the
linearized operator around a local Maxwellian, a relativistic Euler
backbone, the Hilbert-expansion coefficient hierarchy, and an IMEX
remainder solver with a Knudsen-number convergence sweep.
"""

__version__ = "0.1.0"
