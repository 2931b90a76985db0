"""
nehari-bif core - fiber calculus, grids, model triples, configuration and the sphere optimizer.
"""

from .config import (
    EnvSettings,
    LambdaGrid,
    OptimizerOptions,
    ParsedConfig,
    SweepConfig,
    parse_config,
)
from .errors import NehariError
from .fiber import (
    Exponents,
    FiberCase,
    FiberClassification,
    FiberCoefficients,
    RayleighValues,
    classify_fiber,
    eval_fiber,
    eval_fiber_derivatives,
    rayleigh_lambda,
    rayleigh_lambda0,
    rayleigh_t,
    rayleigh_t0,
    rayleigh_values,
)
from .grid import Grid, GridFunction
from .models import (
    HypothesisReport,
    KirchhoffModel,
    ModelConstants,
    ModelEval,
    ModelSpec,
    NEPModel,
    eval_triple,
    h1_norm,
    verify_hypotheses,
)
from .scheduler import RestartScheduler

__all__ = [
    # Fiber calculus
    "Exponents",
    "FiberCoefficients",
    "FiberCase",
    "FiberClassification",
    "RayleighValues",
    "eval_fiber",
    "eval_fiber_derivatives",
    "classify_fiber",
    "rayleigh_lambda",
    "rayleigh_lambda0",
    "rayleigh_t",
    "rayleigh_t0",
    "rayleigh_values",
    # Models
    "Grid",
    "GridFunction",
    "ModelSpec",
    "KirchhoffModel",
    "NEPModel",
    "ModelEval",
    "ModelConstants",
    "HypothesisReport",
    "eval_triple",
    "h1_norm",
    "verify_hypotheses",
    # Configuration
    "EnvSettings",
    "OptimizerOptions",
    "LambdaGrid",
    "SweepConfig",
    "ParsedConfig",
    "parse_config",
    "RestartScheduler",
    "NehariError",
]
