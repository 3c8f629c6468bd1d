"""Simulation and analysis of programmable quantum processors."""

__version__ = "0.1.0"
