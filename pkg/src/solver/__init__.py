"""
Solver Module

Jacobi solution of the periodic 3D Poisson demo and the command-line
interface around it.
"""

from .poisson import (
    Checkpoint,
    ConvergenceReport,
    PoissonConfig,
    PoissonStencil,
    analytic_solution,
    jacobi_sweep,
    max_error,
    residual,
    solve_on_endpoint,
    source_term,
)
from .runner import run_poisson

__all__ = [
    "Checkpoint",
    "ConvergenceReport",
    "PoissonConfig",
    "PoissonStencil",
    "analytic_solution",
    "jacobi_sweep",
    "max_error",
    "residual",
    "run_poisson",
    "solve_on_endpoint",
    "source_term",
]
