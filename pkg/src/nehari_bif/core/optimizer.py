"""
Descent on the unit H^1_0 sphere.

All objectives optimized here are 0-homogeneous, so the sphere only removes the scale
direction. Steps follow the Sobolev (Riesz) gradient K^{-1} g projected onto the tangent
space, with a Barzilai-Borwein trial step, Armijo backtracking and retraction by
renormalization.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .config import OptimizerOptions
from .errors import ProjectionError
from .grid import Grid

log = logging.getLogger(__name__)

_MAX_BACKTRACKS = 60
_STALL_WINDOW = 50
_ROUNDOFF = 1e-14
_STEP_BOUNDS = (1e-12, 1e12)


class ObjectiveValue(NamedTuple):
    """Objective value, nodal gradient and the magnitude used for relative tests."""

    value: float
    gradient: np.ndarray
    scale: float


Objective = Callable[[np.ndarray], ObjectiveValue]


@dataclass(frozen=True, eq=False)
class SphereResult:
    """Outcome of one sphere descent run."""

    values: np.ndarray
    value: float
    scale: float
    grad_norm: float
    iterations: int
    converged: bool
    stalled: bool
    stall_accepted: bool = False  # converged only through stall_tol

    @property
    def relative_gradient(self) -> float:
        return self.grad_norm / self.scale if self.scale > 0.0 else math.inf


def _tangent_direction(grid: Grid, u: np.ndarray, gradient: np.ndarray):
    """Steepest-descent direction in H^1 on the tangent space at u, and its H^1 length."""
    riesz = grid.riesz(gradient)
    radial = float(u @ gradient)  # <K^{-1} g, u>_K
    d = -(riesz - radial * u)
    norm = math.sqrt(max(grid.h1_inner(d, d), 0.0))
    return d, norm


def optimize_on_sphere(
    objective: Objective,
    grid: Grid,
    start: np.ndarray,
    opts: OptimizerOptions,
    maximize: bool = False,
    label: str = "sphere",
) -> SphereResult:
    """
    Minimize (or maximize) a 0-homogeneous objective over {u : D(u) = 1}.

    The objective may raise ProjectionError at trial points; such trials are treated as
    failed line-search steps. Converged when the H^{-1} norm of the tangent gradient is at
    most grad_tol times the objective's scale, or at most stall_tol times it for a run that
    stalled at the round-off floor. The result records which of the two applied.
    """
    sign = -1.0 if maximize else 1.0

    def evaluate(values: np.ndarray):
        result = objective(values)
        return sign * result.value, sign * result.gradient, result.scale

    u = grid.normalize(np.asarray(start, dtype=float))
    f, g, scale = evaluate(u)
    d, d_norm = _tangent_direction(grid, u, g)

    step: Optional[float] = None
    prev_u: Optional[np.ndarray] = None
    prev_d: Optional[np.ndarray] = None
    flat = 0
    best_grad = d_norm
    stalled = False
    iteration = 0

    for iteration in range(1, opts.max_iter + 1):
        if d_norm <= opts.grad_tol * scale:
            iteration -= 1
            break

        if prev_u is None:
            step = opts.initial_step / d_norm
        else:
            s = u - prev_u
            y = prev_d - d  # difference of gradients in H^1
            sy = grid.h1_inner(s, y)
            if sy > 0.0:
                step = grid.h1_inner(s, s) / sy
            step = min(max(step, _STEP_BOUNDS[0]), _STEP_BOUNDS[1])

        slack = _ROUNDOFF * max(abs(f), scale)
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            trial = grid.normalize(u + step * d)
            try:
                f_trial, g_trial, scale_trial = evaluate(trial)
            except ProjectionError:
                step *= opts.shrink
                continue
            if f_trial <= f - opts.sufficient_increase * step * d_norm**2 + slack:
                accepted = True
                break
            step *= opts.shrink

        if not accepted:
            log.debug("%s: line search failed at iteration %d", label, iteration)
            stalled = True
            break

        prev_u, prev_d = u, d
        change = abs(f - f_trial)
        u, f, g, scale = trial, f_trial, g_trial, scale_trial
        d, d_norm = _tangent_direction(grid, u, g)
        # stalled: value flat at round-off and the gradient no longer improving
        flat = flat + 1 if change <= slack and d_norm >= best_grad else 0
        best_grad = min(best_grad, d_norm)

        if iteration % 100 == 0:
            log.debug(
                "%s: iteration %d value=%.17g |grad|/scale=%.3e",
                label,
                iteration,
                sign * f,
                d_norm / scale,
            )
        if flat >= _STALL_WINDOW:
            stalled = True
            break

    relative = d_norm / scale if scale > 0.0 else math.inf
    stall_accepted = stalled and opts.grad_tol < relative <= opts.stall_tol
    converged = relative <= opts.grad_tol or stall_accepted
    if stall_accepted:
        log.debug("%s: stalled at |grad|/scale=%.3e, accepted under stall_tol", label, relative)
    return SphereResult(
        values=u,
        value=sign * f,
        scale=scale,
        grad_norm=d_norm,
        iterations=iteration,
        converged=converged,
        stalled=stalled,
        stall_accepted=stall_accepted,
    )
