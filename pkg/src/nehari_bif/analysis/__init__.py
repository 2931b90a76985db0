"""
nehari-bif analysis - extreme parameters, branch solutions and bifurcation diagrams.
"""

from .bifurcation import (
    BifurcationRecord,
    BranchSummary,
    DiagonalPoint,
    DiagonalReport,
    DiagramReport,
    FoldReport,
    FoldStep,
    ProbeReport,
    n0_degenerate_solve,
    nep_diagonal,
    nonexistence_probe,
    sweep,
)
from .extremal import (
    ExtremalReport,
    NEPCrossings,
    NEPScaling,
    maximize_lambda,
    nep_crossings,
    nep_scaling_constants,
    sobolev_route_lambda_star,
    stationarity_residual,
)
from .nehari import (
    BranchId,
    SolutionDiagnostics,
    SolveReport,
    minimize_branch,
    project_to_nehari,
    reduced_objective,
    verify_solution,
)

__all__ = [
    # Extremal
    "ExtremalReport",
    "NEPScaling",
    "NEPCrossings",
    "maximize_lambda",
    "sobolev_route_lambda_star",
    "stationarity_residual",
    "nep_scaling_constants",
    "nep_crossings",
    # Branches
    "BranchId",
    "SolveReport",
    "SolutionDiagnostics",
    "project_to_nehari",
    "reduced_objective",
    "minimize_branch",
    "verify_solution",
    # Diagrams
    "BranchSummary",
    "BifurcationRecord",
    "DiagramReport",
    "ProbeReport",
    "FoldStep",
    "FoldReport",
    "DiagonalPoint",
    "DiagonalReport",
    "sweep",
    "nonexistence_probe",
    "n0_degenerate_solve",
    "nep_diagonal",
]
