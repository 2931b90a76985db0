"""
Bifurcation diagrams over lambda.

A sweep solves both branches on a lambda grid whose relative upper end is hi times lambda*,
or 1 + margin times it when hi is unset. Each point warm starts from the previous one. The
turning point lambda_b is only located to grid resolution and is reported as a bracket.

For models with T = C3 P^(gamma/p) the closed forms below are the C3 = 1 formulas evaluated
at C3 * lambda, since the energy of such a model equals the C3 = 1 energy at that parameter.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.config import OptimizerOptions, SweepConfig
from ..core.errors import (
    ContinuationError,
    EmptyBranchError,
    InvalidModelError,
    MissingExtremalError,
    NonConvergenceError,
    ValidationError,
    VerificationError,
)
from ..core.fiber import classify_fiber, n0_level, n0_threshold
from ..core.grid import GridFunction
from ..core.models import ModelSpec, NEPModel, eval_triple
from ..core.scheduler import SEQUENTIAL, RestartScheduler
from .extremal import (
    ExtremalReport,
    NEPCrossings,
    maximize_lambda,
    nep_crossings,
    nep_scaling_constants,
)
from .nehari import BranchId, SolveReport, minimize_branch

log = logging.getLogger(__name__)

_SOLVE_FAILURES = (EmptyBranchError, NonConvergenceError, VerificationError)

FOLD_P_RTOL = 0.01
FOLD_ENERGY_RTOL = 0.02
_EXTRAPOLATION_POINTS = 4


@dataclass(frozen=True)
class BranchSummary:
    """The part of a SolveReport kept in a diagram."""

    energy: float
    P_val: float
    residual: float

    @classmethod
    def from_report(cls, report: SolveReport) -> "BranchSummary":
        return cls(energy=report.energy, P_val=report.P_val, residual=report.residual)


@dataclass(frozen=True)
class BifurcationRecord:
    """Solver outcome at one lambda."""

    lam: float
    plus: Optional[BranchSummary]
    minus: Optional[BranchSummary]
    fiber_case_at_maximizer: str

    @property
    def exists(self) -> bool:
        return self.plus is not None or self.minus is not None


@dataclass(frozen=True)
class DiagramReport:
    """A swept bifurcation diagram with its extreme parameters and fold diagnostics."""

    model_id: str
    lambda0_star: float
    lambda_star: float
    records: Tuple[BifurcationRecord, ...]
    lambda_b_empirical: Optional[float]
    lambda_b_bracket: Optional[Tuple[float, Optional[float]]]
    limit_energy_predicted: Optional[float]
    limit_energy_observed: Optional[float]
    seed: int
    grid_spec: str

    def zero_energy_bracket(self) -> Optional[Tuple[float, float]]:
        """Adjacent grid points where the plus energy changes from negative to nonnegative."""
        plus = [(r.lam, r.plus.energy) for r in self.records if r.plus is not None]
        for (lam_a, e_a), (lam_b, e_b) in zip(plus, plus[1:]):
            if e_a < 0.0 <= e_b:
                return lam_a, lam_b
        return None


def _fiber_case(extremal: ExtremalReport, lam: float) -> str:
    ev = eval_triple(extremal.spec, extremal.maximizer)
    return classify_fiber(ev.fiber(lam)).tag


def _solve_point(
    spec: ModelSpec,
    lam: float,
    opts: OptimizerOptions,
    extremal: ExtremalReport,
    warm: Dict[BranchId, Optional[GridFunction]],
    scheduler: RestartScheduler,
) -> Tuple[BifurcationRecord, Dict[BranchId, SolveReport]]:
    solved: Dict[BranchId, SolveReport] = {}
    for branch in (BranchId.PLUS, BranchId.MINUS):
        try:
            solved[branch] = minimize_branch(
                spec,
                lam,
                branch,
                opts,
                warm_start=warm.get(branch),
                extremal=extremal,
                scheduler=scheduler,
            )
        except _SOLVE_FAILURES as exc:
            log.debug("lambda=%.6g %s: %s", lam, branch.value, exc)

    def summary(branch: BranchId) -> Optional[BranchSummary]:
        return BranchSummary.from_report(solved[branch]) if branch in solved else None

    record = BifurcationRecord(
        lam=float(lam),
        plus=summary(BranchId.PLUS),
        minus=summary(BranchId.MINUS),
        fiber_case_at_maximizer=_fiber_case(extremal, lam),
    )
    if not record.exists and lam < extremal.lambda_star:
        log.warning("No branch converged at lambda=%.6g below lambda*", lam)
    return record, solved


def sweep(
    config: SweepConfig,
    extremal: Optional[ExtremalReport],
    scheduler: Optional[RestartScheduler] = None,
) -> DiagramReport:
    """
    Solve both branches over the configured lambda grid.

    With warm starts the grid is walked in order and each branch starts from its last
    solution; without them the grid points are independent and run on the scheduler.
    Failures at single points are recorded, not raised.
    """
    if extremal is None:
        raise MissingExtremalError("sweep needs an extremal report for the model")
    spec = config.model
    if extremal.spec != spec:
        raise InvalidModelError("extremal report belongs to a different model")
    scheduler = scheduler or SEQUENTIAL
    opts = config.solver_opts
    lams = config.lambda_values(extremal.lambda_star)
    log.info("Sweeping %d lambda values for %s", len(lams), spec.model_id)

    records: List[BifurcationRecord] = []
    if config.warm_start:
        warm: Dict[BranchId, Optional[GridFunction]] = {}
        for lam in lams:
            record, solved = _solve_point(spec, float(lam), opts, extremal, warm, scheduler)
            for branch, report in solved.items():
                warm[branch] = report.solution
            records.append(record)
    else:
        records = scheduler.map(
            lambda lam: _solve_point(spec, float(lam), opts, extremal, {}, SEQUENTIAL)[0], lams
        )

    existing = [i for i, r in enumerate(records) if r.exists]
    lambda_b = bracket = observed = None
    if existing:
        last = existing[-1]
        lambda_b = records[last].lam
        upper = records[last + 1].lam if last + 1 < len(records) else None
        bracket = (lambda_b, upper)
        if records[last].minus is not None:
            observed = records[last].minus.energy

    c3 = spec.structure_constant()
    predicted = n0_level(extremal.lambda_star, spec.exps, c3) if c3 is not None else None

    report = DiagramReport(
        model_id=spec.model_id,
        lambda0_star=extremal.lambda0_star,
        lambda_star=extremal.lambda_star,
        records=tuple(records),
        lambda_b_empirical=lambda_b,
        lambda_b_bracket=bracket,
        limit_energy_predicted=predicted,
        limit_energy_observed=observed,
        seed=opts.seed,
        grid_spec=config.grid_spec,
    )
    log.info(
        "%s: lambda_b in %s, limit energy predicted=%s observed=%s",
        spec.model_id,
        bracket,
        predicted,
        observed,
    )
    return report


@dataclass(frozen=True)
class ProbeReport:
    """Fiber shapes of sampled rays at one lambda."""

    lam: float
    directions: int
    case_counts: Dict[str, int]
    case3_fraction: float
    maximizer_case: Optional[str]

    @property
    def certifies_empty(self) -> bool:
        """Every sampled ray is case III, so the Nehari set misses all of them."""
        return self.case3_fraction == 1.0


def nonexistence_probe(
    spec: ModelSpec,
    lam: float,
    directions: int = 200,
    seed: int = 0,
    extremal: Optional[ExtremalReport] = None,
    scheduler: Optional[RestartScheduler] = None,
) -> ProbeReport:
    """Classify the fibers of `directions` random rays (plus the maximizer ray) at lam."""
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValidationError(f"lambda must be positive, got {lam}")
    if directions < 0:
        raise ValidationError(f"directions must be >= 0, got {directions}")
    scheduler = scheduler or SEQUENTIAL
    rng = np.random.default_rng(seed)
    rays = [spec.grid.random_field(rng) for _ in range(directions)]
    if extremal is not None:
        rays.append(extremal.maximizer.values)
    if not rays:
        raise ValidationError("probe needs at least one ray")

    def classify(values: np.ndarray) -> str:
        return classify_fiber(spec.evaluate(values).fiber(lam)).tag

    tags = scheduler.map(classify, rays)
    counts = {tag: tags.count(tag) for tag in ("I", "II", "III")}
    report = ProbeReport(
        lam=lam,
        directions=len(rays),
        case_counts=counts,
        case3_fraction=counts["III"] / len(rays),
        maximizer_case=tags[-1] if extremal is not None else None,
    )
    if (
        extremal is not None
        and lam > extremal.lambda_star * (1.0 + 1e-6)
        and not report.certifies_empty
    ):
        log.warning(
            "Rays with a Nehari point found above the lambda* estimate; the estimate is low"
        )
    return report


_DIAGONAL_DEFAULTS = (0.5, 0.98, 1.05)


@dataclass(frozen=True)
class DiagonalPoint:
    """Both branches of the NEP at mu = lambda."""

    lam: float
    regime: str  # below_mu0 | between | above_lambda_cross
    plus: Optional[BranchSummary]
    minus: Optional[BranchSummary]
    case3_fraction: float


@dataclass(frozen=True)
class DiagonalReport:
    """The NEP along mu = lambda with the crossings that split it into three regimes."""

    model_id: str
    crossings: NEPCrossings
    points: Tuple[DiagonalPoint, ...]


def _diagonal_regime(lam: float, crossings: NEPCrossings) -> str:
    if lam < crossings.mu0:
        return "below_mu0"
    if lam < crossings.lambda_star_cross:
        return "between"
    return "above_lambda_cross"


def nep_diagonal(
    spec: ModelSpec,
    opts: Optional[OptimizerOptions] = None,
    lams: Optional[List[float]] = None,
    directions: int = 200,
    seed: int = 0,
    extremal: Optional[ExtremalReport] = None,
    scheduler: Optional[RestartScheduler] = None,
) -> DiagonalReport:
    """
    Solve the NEP with mu = lambda at each value in lams.

    Defaults to mu0 / 2, 0.98 lambda_* and 1.05 lambda_*. Below mu0 every probed ray must be
    case III. From lambda_* on the plus branch must have negative energy and the minus branch
    positive energy. Points in between are reported without a check; just below lambda_* both
    energies are positive there.

    The maximizer of lambda(u) does not depend on mu, so the extremal report at the model's
    own mu is rescaled along the power law instead of recomputed.
    """
    if not isinstance(spec, NEPModel):
        raise InvalidModelError(f"the mu = lambda diagonal needs an nep model, got {spec.kind}")
    opts = opts or OptimizerOptions()
    scheduler = scheduler or SEQUENTIAL
    if extremal is None:
        extremal = maximize_lambda(spec, opts, scheduler=scheduler)
    scaling = nep_scaling_constants(spec, opts, scheduler, extremal)
    crossings = nep_crossings(scaling)
    if lams is None:
        lams = [
            _DIAGONAL_DEFAULTS[0] * crossings.mu0,
            _DIAGONAL_DEFAULTS[1] * crossings.lambda_star_cross,
            _DIAGONAL_DEFAULTS[2] * crossings.lambda_star_cross,
        ]
    log.info(
        "%s: diagonal at %d values, mu0=%.17g lambda_*=%.17g",
        spec.model_id,
        len(lams),
        crossings.mu0,
        crossings.lambda_star_cross,
    )

    points: List[DiagonalPoint] = []
    for lam in lams:
        lam = float(lam)
        if not (math.isfinite(lam) and lam > 0.0):
            raise ValidationError(f"lambda must be positive, got {lam}")
        model = spec.with_mu(lam)
        factor = (lam / spec.mu) ** scaling.exponent
        ext = replace(
            extremal,
            spec=model,
            lambda_star=extremal.lambda_star * factor,
            lambda0_star=extremal.lambda0_star * factor,
        )
        probe = nonexistence_probe(model, lam, directions, seed, ext, scheduler)
        solved: Dict[BranchId, BranchSummary] = {}
        if lam < ext.lambda_star:
            for branch in (BranchId.PLUS, BranchId.MINUS):
                try:
                    report = minimize_branch(
                        model, lam, branch, opts, extremal=ext, scheduler=scheduler
                    )
                except _SOLVE_FAILURES as exc:
                    log.debug("diagonal lambda=%.6g %s: %s", lam, branch.value, exc)
                    continue
                solved[branch] = BranchSummary.from_report(report)

        point = DiagonalPoint(
            lam=lam,
            regime=_diagonal_regime(lam, crossings),
            plus=solved.get(BranchId.PLUS),
            minus=solved.get(BranchId.MINUS),
            case3_fraction=probe.case3_fraction,
        )
        if point.regime == "below_mu0" and not probe.certifies_empty:
            raise VerificationError(
                "diagonal_empty",
                f"rays with a Nehari point at lambda={lam:.17g} below mu0={crossings.mu0:.17g}",
            )
        if point.regime == "above_lambda_cross":
            if point.plus is None or point.minus is None:
                raise VerificationError(
                    "diagonal_sign", f"a branch is missing at lambda={lam:.17g}"
                )
            if not point.plus.energy < 0.0 < point.minus.energy:
                raise VerificationError(
                    "diagonal_sign",
                    f"expected energy_plus < 0 < energy_minus at lambda={lam:.17g}, got "
                    f"{point.plus.energy:.17g} and {point.minus.energy:.17g}",
                )
        log.info(
            "diagonal lambda=%.10g (%s): energy_plus=%s energy_minus=%s",
            lam,
            point.regime,
            point.plus.energy if point.plus else None,
            point.minus.energy if point.minus else None,
        )
        points.append(point)

    return DiagonalReport(model_id=spec.model_id, crossings=crossings, points=tuple(points))

@dataclass(frozen=True)
class FoldStep:
    lam: float
    energy_plus: float
    energy_minus: float
    P_plus: float
    P_minus: float

    @property
    def merge_gap(self) -> float:
        return abs(self.energy_plus - self.energy_minus) / abs(self.energy_minus)


@dataclass(frozen=True, eq=False)
class FoldReport:
    """Continuation of both branches into the fold at lambda*."""

    lambda_star: float
    steps: Tuple[FoldStep, ...]
    last: SolveReport
    P_predicted: float
    energy_predicted: float
    P_extrapolated: float
    energy_extrapolated: float

    @property
    def merge_gap(self) -> float:
        return self.steps[-1].merge_gap


def _extrapolate(s: np.ndarray, values: np.ndarray) -> float:
    """Value at s = 0 of a line through the last points; branches meet like sqrt(lambda* - lam)."""
    s, values = s[-_EXTRAPOLATION_POINTS:], values[-_EXTRAPOLATION_POINTS:]
    if len(s) < 2:
        return float(values[-1])
    _, intercept = np.polyfit(s, values, 1)
    return float(intercept)


def n0_degenerate_solve(
    spec: ModelSpec,
    extremal: ExtremalReport,
    opts: Optional[OptimizerOptions] = None,
    max_steps: int = 20,
    min_steps: int = 5,
    scheduler: Optional[RestartScheduler] = None,
) -> FoldReport:
    """
    Continue both branches to lambda_k = lambda* (1 - 2^-k), k = 1..max_steps.

    Checks that P on the minus branch approaches the N0 threshold (within 1%) and that the
    extrapolated minus energy approaches the N0 level (within 2%). Only for models with
    T = C3 P^(gamma/p).
    """
    c3 = spec.structure_constant()
    if c3 is None:
        raise InvalidModelError(f"fold continuation needs T = C3 P^(gamma/p); {spec.kind} has not")
    if extremal.spec != spec:
        raise InvalidModelError("extremal report belongs to a different model")
    opts = opts or OptimizerOptions()
    lambda_star = extremal.lambda_star
    e = spec.exps

    steps: List[FoldStep] = []
    last: Optional[SolveReport] = None
    warm = {BranchId.PLUS: extremal.maximizer, BranchId.MINUS: extremal.maximizer}
    for k in range(1, max_steps + 1):
        lam = lambda_star * (1.0 - 2.0**-k)
        try:
            plus = minimize_branch(
                spec, lam, BranchId.PLUS, opts, warm[BranchId.PLUS], extremal, scheduler
            )
            minus = minimize_branch(
                spec, lam, BranchId.MINUS, opts, warm[BranchId.MINUS], extremal, scheduler
            )
        except _SOLVE_FAILURES as exc:
            log.warning("Continuation stopped at k=%d (lambda=%.17g): %s", k, lam, exc)
            break
        warm = {BranchId.PLUS: plus.solution, BranchId.MINUS: minus.solution}
        steps.append(FoldStep(lam, plus.energy, minus.energy, plus.P_val, minus.P_val))
        last = minus

    if len(steps) < min_steps:
        raise ContinuationError(
            f"continuation toward lambda*={lambda_star:.17g} lost convergence after "
            f"{len(steps)} steps (need {min_steps})"
        )

    s = np.sqrt(1.0 - np.array([step.lam for step in steps]) / lambda_star)
    P_extrapolated = _extrapolate(s, np.array([step.P_minus for step in steps]))
    energy_extrapolated = _extrapolate(s, np.array([step.energy_minus for step in steps]))
    P_predicted = n0_threshold(lambda_star, e, c3)
    energy_predicted = n0_level(lambda_star, e, c3)

    report = FoldReport(
        lambda_star=lambda_star,
        steps=tuple(steps),
        last=last,
        P_predicted=P_predicted,
        energy_predicted=energy_predicted,
        P_extrapolated=P_extrapolated,
        energy_extrapolated=energy_extrapolated,
    )

    P_error = abs(steps[-1].P_minus - P_predicted) / P_predicted
    if P_error > FOLD_P_RTOL:
        raise VerificationError("fold_P", f"P off the N0 threshold by {P_error:.3%}")
    energy_error = abs(energy_extrapolated - energy_predicted) / abs(energy_predicted)
    if energy_error > FOLD_ENERGY_RTOL:
        raise VerificationError("fold_energy", f"limit energy off by {energy_error:.3%}")

    log.info(
        "Fold at lambda*=%.17g: P=%.17g (predicted %.17g), energy=%.17g (predicted %.17g)",
        lambda_star,
        P_extrapolated,
        P_predicted,
        energy_extrapolated,
        energy_predicted,
    )
    return report
