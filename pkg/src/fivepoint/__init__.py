"""Exact five-point connection formula for critical percolation: closed-form
evaluation, PDE and eigenvalue verification, SLE martingale checks and lattice
Monte Carlo."""

from .conformal import BoundaryConfig
from .errors import ConvergenceError, DomainError
from .formulas import constants, five_point_F

__version__ = "0.1.0"

__all__ = ["BoundaryConfig", "ConvergenceError", "DomainError", "constants", "five_point_F"]
