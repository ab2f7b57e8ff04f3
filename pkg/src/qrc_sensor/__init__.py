"""Kerr-lattice reservoir simulator with trained classical readouts."""

__version__ = "0.1.0"
