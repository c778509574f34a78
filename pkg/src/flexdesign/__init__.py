"""Integrated design and demand-response scheduling with PV, wind and battery."""
__version__ = "0.1.0"
