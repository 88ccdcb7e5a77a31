"""
tpmab - Temporally-Partitioned Multi-Armed Bandits
Simulation and analysis toolkit for bandits whose rewards arrive spread over time.
"""

__version__ = "0.1.0"
__author__ = "tpmab developers"
