"""Relative commutators of normal subobjects in finite pointed algebras."""

__version__ = "0.1.0"
