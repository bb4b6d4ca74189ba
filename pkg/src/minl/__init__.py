"""Heralded two-mode squeezing from a four-beam-splitter interferometer."""

__version__ = "0.1.0"
