"""Finite-lattice laboratory for a variable-coefficient Nelson model."""

__version__ = "0.1.0"
