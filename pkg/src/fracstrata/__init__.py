"""Fractional heat transfer in a layered oil stratum: special functions, transforms, kernels and solvers."""

from .errors import ConfigError, DistributionalCaseError, DomainError, EvaluationError
from .laplace import InvSpec, QuadSpec
from .solvers import (EvalPoint, FieldGrid, GridCell, solve, solve_grid, solve_line, solve_t1,
                      solve_t1_classical, solve_t2, solve_t3, solve_t3_classical)
from .transforms import PROBLEMS, Forcing, StratumParams

__all__ = [
    "ConfigError", "DistributionalCaseError", "DomainError", "EvaluationError",
    "InvSpec", "QuadSpec",
    "EvalPoint", "FieldGrid", "GridCell", "solve", "solve_grid", "solve_line", "solve_t1",
    "solve_t1_classical", "solve_t2", "solve_t3", "solve_t3_classical",
    "PROBLEMS", "Forcing", "StratumParams",
]
