"""
nehari-bif - Nehari manifold and fibering analysis for P(u) + lam T(u) - Q(u) = 0.

Architecture:
    - Core: fiber calculus, grids, model triples, configuration, sphere optimizer
    - Analysis: extreme parameters, branch solutions, bifurcation diagrams
    - Report: deterministic CSV output and run manifests

Example:
    from nehari_bif.core import Grid, KirchhoffModel
    from nehari_bif.analysis import BranchId, maximize_lambda, minimize_branch

    spec = KirchhoffModel(a=1.0, q=3.0, grid=Grid(dim=1, n=200))
    extremal = maximize_lambda(spec)
    report = minimize_branch(spec, 0.5 * extremal.lambda_star, BranchId.MINUS, extremal=extremal)
"""

__version__ = "1.0.0"

from .analysis import (
    BranchId,
    maximize_lambda,
    minimize_branch,
    n0_degenerate_solve,
    nep_diagonal,
    nonexistence_probe,
    sweep,
)
from .core import (
    Exponents,
    FiberCoefficients,
    Grid,
    KirchhoffModel,
    NEPModel,
    classify_fiber,
    parse_config,
)

__all__ = [
    # Core
    "Exponents",
    "FiberCoefficients",
    "classify_fiber",
    "Grid",
    "KirchhoffModel",
    "NEPModel",
    "parse_config",
    # Analysis
    "BranchId",
    "maximize_lambda",
    "minimize_branch",
    "sweep",
    "nonexistence_probe",
    "n0_degenerate_solve",
    "nep_diagonal",
]
