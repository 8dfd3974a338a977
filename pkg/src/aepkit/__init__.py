"""Simulation and exact numerics for finite-range asymmetric exclusion processes."""

__version__ = "0.1.0"
