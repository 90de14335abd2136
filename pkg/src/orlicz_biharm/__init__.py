"""Eigenproblems for the biharmonic g-Laplacian on Orlicz-Sobolev spaces, discretized on grids."""

from orlicz_biharm.eigensolver import EigenResult, SolverConfig, solve_constrained
from orlicz_biharm.grid import Grid, GridFunction
from orlicz_biharm.nfunction import PiecewisePower, Power, PowerLog
from orlicz_biharm.spectrum_map import find_critical_point, regime_report

__all__ = [
    "EigenResult",
    "Grid",
    "GridFunction",
    "PiecewisePower",
    "Power",
    "PowerLog",
    "SolverConfig",
    "find_critical_point",
    "regime_report",
    "solve_constrained",
]
