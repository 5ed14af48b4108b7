"""Simulation and analysis of fault-tolerant Q1 polar-code state preparation."""

__version__ = "0.1.0"
