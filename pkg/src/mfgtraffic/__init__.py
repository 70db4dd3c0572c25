"""Robust mean-field game of autonomous traffic on a ring road.

Backward HJB-Isaacs and forward kinetic (Kolmogorov) solvers coupled by a
Picard iteration, plus a reflected-SDE particle check of the mean-field
density.
"""

__version__ = "0.1.0"

from .config import (CongestionKernel, Config, ModelParams, RunConfig, default_params,
                     initial_density, load_config)
from .fixed_point import run_algorithm1
from .grid import PhaseGrid
from .trajectory import TimeGrid, TrajectoryStore

__all__ = [
    "CongestionKernel", "Config", "ModelParams", "PhaseGrid", "RunConfig", "TimeGrid",
    "TrajectoryStore", "default_params", "initial_density", "load_config", "run_algorithm1",
]
