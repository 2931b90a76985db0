"""
Solution branches at fixed lambda by fibering reduction.

A direction v is sent to its fiber root t_plus(v) v (branch N+) or t_minus(v) v (branch N-),
and the reduced energy J(v) = Phi_lam(t(v) v) is minimized over the unit H^1 sphere. Because
phi'(t) = 0 at the roots, grad J(v) = t grad Phi_lam(t v): no derivative of t is needed.

The minus branch computes the N- ground state, which stands in for the mountain-pass
solution; reports label it J_minus_ground_state.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from ..core.config import OptimizerOptions
from ..core.errors import (
    DegenerateDirectionError,
    EmptyBranchError,
    NoProjectionError,
    NonConvergenceError,
    ProjectionError,
    ValidationError,
    VerificationError,
)
from ..core.fiber import (
    FiberCase,
    classify_fiber,
    n0_level,
    n0_threshold,
    nehari_lower_bound,
)
from ..core.grid import GridFunction
from ..core.models import ModelConstants, ModelEval, ModelSpec, eval_triple, h1_norm
from ..core.optimizer import ObjectiveValue, SphereResult, optimize_on_sphere
from ..core.scheduler import SEQUENTIAL, RestartScheduler
from .extremal import ExtremalReport

log = logging.getLogger(__name__)

NEHARI_RTOL = 1e-8
# Allowed positive plus energy, relative to P, when lambda <= lambda_0*
_ENERGY_SIGN_SLACK = 1e-8
_CEILING_SLACK = 1e-9


class BranchId(Enum):
    """The two Nehari branches."""

    PLUS = "plus"
    MINUS = "minus"

    @property
    def target(self) -> str:
        """Name of the quantity the branch minimizes."""
        return "J_plus" if self is BranchId.PLUS else "J_minus_ground_state"

    @classmethod
    def parse(cls, name: str) -> "BranchId":
        try:
            return cls(name.lower())
        except ValueError as exc:
            raise ValidationError(f"branch must be 'plus' or 'minus', got '{name}'") from exc


@dataclass(frozen=True, eq=False)
class SolveReport:
    """A branch solution at one lambda."""

    model_id: str
    lam: float
    branch: BranchId
    solution: GridFunction
    energy: float
    residual: float  # |grad Phi|_{H^-1} / |grad Q|_{H^-1}
    nehari_residual: float  # |P + lam T - Q| / Q
    second_order_sign: float  # phi''(1) along the solution ray
    P_val: float
    converged: bool
    iterations: int = 0
    restarts_used: int = 1
    stalled: bool = False  # accepted at stall_tol rather than grad_tol

    @property
    def target(self) -> str:
        return self.branch.target


@dataclass(frozen=True)
class SolutionDiagnostics:
    """Recomputed certification quantities of a SolveReport."""

    residual: float
    nehari_residual: float
    second_order_sign: float
    norm: float
    norm_lower_bound: Optional[float]
    n0_threshold: Optional[float]
    energy_ceiling: Optional[float]
    checks: Tuple[str, ...]


def _branch_scale(ev: ModelEval, lam: float, branch: BranchId) -> float:
    classification = classify_fiber(ev.fiber(lam))
    if classification.case is FiberCase.III:
        raise NoProjectionError(f"fiber has no critical point at lambda={lam:.17g}")
    if classification.case is FiberCase.II:
        raise DegenerateDirectionError(f"fiber is degenerate at lambda={lam:.17g}")
    return classification.t_plus if branch is BranchId.PLUS else classification.t_minus


def project_to_nehari(
    spec: ModelSpec, u: GridFunction, lam: float, branch: BranchId
) -> GridFunction:
    """Scale u to the fiber root of the requested branch."""
    ev = eval_triple(spec, u)
    if ev.P_val == 0.0:
        raise ValidationError("cannot project the zero field")
    return u.scaled(_branch_scale(ev, lam, branch))


def reduced_objective(spec: ModelSpec, lam: float, branch: BranchId):
    """J(v) = Phi_lam(t(v) v) and its gradient; raises ProjectionError off the branch."""

    def evaluate(values: np.ndarray) -> ObjectiveValue:
        ev = spec.evaluate(values)
        t = _branch_scale(ev, lam, branch)
        at = ev.scaled(t)
        return ObjectiveValue(at.energy(lam), t * at.energy_gradient(lam), at.Q_val)

    return evaluate


def _certify(spec: ModelSpec, u: GridFunction, lam: float):
    """(ModelEval, residual, nehari_residual) at a candidate solution."""
    ev = eval_triple(spec, u)
    grid = spec.grid
    grad_q = grid.dual_norm(ev.gradQ)
    residual = grid.dual_norm(ev.energy_gradient(lam)) / grad_q if grad_q > 0.0 else math.inf
    nehari = abs(ev.nehari_value(lam)) / ev.Q_val if ev.Q_val > 0.0 else math.inf
    return ev, residual, nehari


def _solve_report(
    spec: ModelSpec,
    lam: float,
    branch: BranchId,
    result: SphereResult,
    opts: OptimizerOptions,
    restarts_used: int,
) -> SolveReport:
    direction = spec.evaluate(result.values)
    t = _branch_scale(direction, lam, branch)
    solution = GridFunction(spec.grid, t * result.values).sign_normalized()
    ev, residual, nehari = _certify(spec, solution, lam)
    return SolveReport(
        model_id=spec.model_id,
        lam=lam,
        branch=branch,
        solution=solution,
        energy=ev.energy(lam),
        residual=residual,
        nehari_residual=nehari,
        second_order_sign=ev.second_derivative(lam),
        P_val=ev.P_val,
        converged=result.converged and residual <= opts.residual_tol and nehari <= NEHARI_RTOL,
        iterations=result.iterations,
        restarts_used=restarts_used,
        stalled=result.stall_accepted,
    )


def minimize_branch(
    spec: ModelSpec,
    lam: float,
    branch: BranchId,
    opts: Optional[OptimizerOptions] = None,
    warm_start: Optional[GridFunction] = None,
    extremal: Optional[ExtremalReport] = None,
    scheduler: Optional[RestartScheduler] = None,
) -> SolveReport:
    """
    Ground state of Phi_lam on N+ (PLUS) or N- (MINUS).

    A converged warm start is returned directly. Otherwise restarts begin from the extremal
    maximizer (when given), the principal eigenvector and seeded random fields; a start
    without a projection is redrawn up to max_resamples times. Raises EmptyBranchError when
    no start projects and NonConvergenceError (carrying the best report) when none converges.
    """
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValidationError(f"lambda must be positive, got {lam}")
    opts = opts or OptimizerOptions()
    scheduler = scheduler or SEQUENTIAL
    grid = spec.grid
    fn = reduced_objective(spec, lam, branch)
    label = f"{branch.value}@{lam:.6g}"

    if warm_start is not None:
        try:
            fn(warm_start.values)
        except ProjectionError:
            log.debug("%s: warm start has no projection, falling back to multistart", label)
        else:
            result = optimize_on_sphere(fn, grid, warm_start.values, opts, label=f"{label}[warm]")
            report = _solve_report(spec, lam, branch, result, opts, restarts_used=1)
            if report.converged:
                return _check_energy_sign(report, extremal)
            log.debug("%s: warm start did not converge, falling back to multistart", label)

    preferred: List[np.ndarray] = []
    if extremal is not None:
        preferred.append(extremal.maximizer.values)
    preferred.append(grid.principal_direction())

    def run(index: int) -> Optional[SphereResult]:
        rng = np.random.default_rng([opts.seed, index])
        start = preferred[index] if index < len(preferred) else grid.random_field(rng)
        for _ in range(opts.max_resamples + 1):
            try:
                fn(start)
                break
            except ProjectionError:
                start = grid.random_field(rng)
        else:
            log.debug("%s[%d]: no projectable direction found", label, index)
            return None
        return optimize_on_sphere(fn, grid, start, opts, label=f"{label}[{index}]")

    results = scheduler.map(run, range(opts.restarts))
    reports = [
        (index, _solve_report(spec, lam, branch, result, opts, opts.restarts))
        for index, result in enumerate(results)
        if result is not None
    ]
    if not reports:
        raise EmptyBranchError(
            f"no sampled ray projects onto {branch.value} at lambda={lam:.17g} "
            f"({opts.restarts} restarts x {opts.max_resamples} resamples)"
        )

    converged = [(i, r) for i, r in reports if r.converged]
    pool = converged or reports
    _, best = min(pool, key=lambda item: (item[1].energy, item[0]))
    if not converged:
        raise NonConvergenceError(
            f"{branch.value} branch did not converge at lambda={lam:.17g} "
            f"(best residual {best.residual:.3e})",
            best=best,
        )
    log.debug(
        "%s: energy=%.17g residual=%.3e (%d/%d restarts converged)",
        label,
        best.energy,
        best.residual,
        len(converged),
        opts.restarts,
    )
    return _check_energy_sign(best, extremal)


def _check_energy_sign(report: SolveReport, extremal: Optional[ExtremalReport]) -> SolveReport:
    """Below lambda_0* the plus solution is the global minimizer and has nonpositive energy."""
    if (
        extremal is not None
        and report.branch is BranchId.PLUS
        and report.lam <= extremal.lambda0_star
        and report.energy > _ENERGY_SIGN_SLACK * report.P_val
    ):
        raise VerificationError(
            "energy_sign",
            f"plus energy {report.energy:.6g} > 0 at lambda={report.lam:.6g} <= lambda0*",
        )
    return report


def verify_solution(
    spec: ModelSpec,
    report: SolveReport,
    constants: Optional[ModelConstants] = None,
    residual_tol: float = 1e-6,
) -> SolutionDiagnostics:
    """
    Recompute and check the certification quantities of a branch solution.

    Checks, in order: converged, nehari, residual, second_order, norm_bound (with constants),
    and for models with T = C3 P^(gamma/p) branch_threshold and energy_ceiling.
    Raises VerificationError naming the first failed check.
    """
    checks: List[str] = []
    if not report.converged:
        raise VerificationError("converged", "report is not converged")
    checks.append("converged")

    u = report.solution
    if not np.any(u.values):
        raise VerificationError("nehari", "the zero field is not a Nehari point")
    lam = report.lam
    e = spec.exps
    ev, residual, nehari = _certify(spec, u, lam)

    if nehari > NEHARI_RTOL:
        raise VerificationError("nehari", f"relative Nehari residual {nehari:.3e}")
    checks.append("nehari")
    if residual > residual_tol:
        raise VerificationError("residual", f"relative gradient residual {residual:.3e}")
    checks.append("residual")

    second = ev.second_derivative(lam)
    expected = 1.0 if report.branch is BranchId.PLUS else -1.0
    if not second * expected > 0.0:
        raise VerificationError(
            "second_order", f"phi''(1)={second:.6g} on the {report.branch.value} branch"
        )
    checks.append("second_order")

    norm = h1_norm(u)
    bound = None
    if constants is not None:
        # Sampled constants may be loose; tighten them with the solution itself
        c1 = min(constants.C1, ev.P_val / norm**e.p)
        c2 = max(constants.C2, ev.Q_val / norm**e.q)
        bound = nehari_lower_bound(c1, c2, e)
        if norm < bound * (1.0 - 1e-9):
            raise VerificationError("norm_bound", f"|u|={norm:.6g} below bound {bound:.6g}")
        checks.append("norm_bound")

    threshold = ceiling = None
    c3 = spec.structure_constant()
    if c3 is not None:
        threshold = n0_threshold(lam, e, c3)
        above = ev.P_val > threshold
        if above != (report.branch is BranchId.PLUS):
            raise VerificationError(
                "branch_threshold",
                f"P={ev.P_val:.6g} on the wrong side of {threshold:.6g} for {report.branch.value}",
            )
        checks.append("branch_threshold")
        ceiling = n0_level(lam, e, c3)
        if ev.energy(lam) > ceiling + _CEILING_SLACK * abs(ceiling):
            raise VerificationError(
                "energy_ceiling", f"energy {ev.energy(lam):.6g} above N0 level {ceiling:.6g}"
            )
        checks.append("energy_ceiling")

    return SolutionDiagnostics(
        residual=residual,
        nehari_residual=nehari,
        second_order_sign=second,
        norm=norm,
        norm_lower_bound=bound,
        n0_threshold=threshold,
        energy_ceiling=ceiling,
        checks=tuple(checks),
    )
