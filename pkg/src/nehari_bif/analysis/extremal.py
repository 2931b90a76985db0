"""
Extreme parameters lambda* and lambda_0*.

Both are suprema of 0-homogeneous maps over nonzero fields,

    lambda*   = sup lambda(u),   lambda_0* = sup lambda_0(u),

and lambda(u) = C(p,q,gamma) lambda_0(u) for every u, so one maximizer serves both.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np

from ..core.config import OptimizerOptions
from ..core.errors import InvalidModelError, NonConvergenceError, VerificationError
from ..core.fiber import rayleigh_lambda, rayleigh_lambda0, rayleigh_t
from ..core.grid import GridFunction
from ..core.models import KirchhoffModel, ModelSpec, NEPModel, eval_triple
from ..core.optimizer import ObjectiveValue, SphereResult, optimize_on_sphere
from ..core.scheduler import SEQUENTIAL, RestartScheduler

log = logging.getLogger(__name__)

ObjectiveName = Literal["lambda", "lambda0"]

_SOBOLEV_RTOL = 1e-15


@dataclass(frozen=True, eq=False)
class ExtremalReport:
    """Estimates of lambda* and lambda_0* with the maximizing direction (unit H^1 norm)."""

    spec: ModelSpec
    lambda_star: float
    lambda0_star: float
    maximizer: GridFunction
    restarts_used: int
    iterations: int
    converged: bool
    ratio_residual: float
    seed: int
    objective: str = "lambda"
    stalled: bool = False  # accepted at stall_tol rather than grad_tol

    @property
    def model_id(self) -> str:
        return self.spec.model_id

    def lambda_of(self, u: GridFunction) -> float:
        """lambda(u) for this report's model."""
        ev = eval_triple(self.spec, u)
        return rayleigh_lambda(ev.P_val, ev.T_val, ev.Q_val, self.spec.exps)

    def lambda0_of(self, u: GridFunction) -> float:
        ev = eval_triple(self.spec, u)
        return rayleigh_lambda0(ev.P_val, ev.T_val, ev.Q_val, self.spec.exps)


def lambda_objective(spec: ModelSpec, objective: ObjectiveName = "lambda"):
    """
    Lambda(u) with its nodal gradient by the chain rule through (P, T, Q).

    log Lambda = const + e1 log Q - log T - e2 log P with e1 = (gamma-p)/(q-p) and
    e2 = (gamma-q)/(q-p).
    """
    if objective not in ("lambda", "lambda0"):
        raise InvalidModelError(f"unknown extremal objective '{objective}'")
    e = spec.exps
    e1 = (e.gamma - e.p) / (e.q - e.p)
    e2 = (e.gamma - e.q) / (e.q - e.p)
    rayleigh = rayleigh_lambda if objective == "lambda" else rayleigh_lambda0

    def evaluate(values: np.ndarray) -> ObjectiveValue:
        ev = spec.evaluate(values)
        value = rayleigh(ev.P_val, ev.T_val, ev.Q_val, e)
        grad = value * (e1 * ev.gradQ / ev.Q_val - ev.gradT / ev.T_val - e2 * ev.gradP / ev.P_val)
        return ObjectiveValue(value, grad, value)

    return evaluate


def start_direction(spec: ModelSpec, seed: int, index: int) -> np.ndarray:
    """Restart 0 starts from the principal eigenvector, the others from seeded random fields."""
    if index == 0:
        return spec.grid.principal_direction()
    return spec.grid.random_field(np.random.default_rng([seed, index]))


def _report(
    spec: ModelSpec,
    result: SphereResult,
    restarts: int,
    seed: int,
    objective: str,
    converged: bool,
) -> ExtremalReport:
    maximizer = GridFunction(spec.grid, result.values).sign_normalized()
    ev = eval_triple(spec, maximizer)
    lam = rayleigh_lambda(ev.P_val, ev.T_val, ev.Q_val, spec.exps)
    lam0 = rayleigh_lambda0(ev.P_val, ev.T_val, ev.Q_val, spec.exps)
    ratio = spec.exps.ratio_constant
    return ExtremalReport(
        spec=spec,
        lambda_star=lam,
        lambda0_star=lam0,
        maximizer=maximizer,
        restarts_used=restarts,
        iterations=result.iterations,
        converged=converged,
        ratio_residual=abs(lam / lam0 - ratio) / ratio,
        seed=seed,
        objective=objective,
        stalled=result.stall_accepted,
    )


def maximize_lambda(
    spec: ModelSpec,
    opts: Optional[OptimizerOptions] = None,
    objective: ObjectiveName = "lambda",
    scheduler: Optional[RestartScheduler] = None,
) -> ExtremalReport:
    """
    Estimate lambda* and lambda_0* by multistart ascent of Lambda on the unit H^1 sphere.

    Restarts are reduced by restart index, so the report depends only on (seed, restarts).
    Raises NonConvergenceError carrying the best report when no restart converges.
    """
    opts = opts or OptimizerOptions()
    scheduler = scheduler or SEQUENTIAL
    fn = lambda_objective(spec, objective)

    def run(index: int) -> SphereResult:
        result = optimize_on_sphere(
            fn,
            spec.grid,
            start_direction(spec, opts.seed, index),
            opts,
            maximize=True,
            label=f"{objective}[{index}]",
        )
        log.debug(
            "Restart %d: %s=%.17g after %d iterations (converged=%s)",
            index,
            objective,
            result.value,
            result.iterations,
            result.converged,
        )
        return result

    results: List[SphereResult] = scheduler.map(run, range(opts.restarts))
    converged = [i for i, r in enumerate(results) if r.converged]
    pool = converged or list(range(len(results)))
    best = max(pool, key=lambda i: (results[i].value, -i))
    report = _report(spec, results[best], opts.restarts, opts.seed, objective, bool(converged))

    if not converged:
        raise NonConvergenceError(
            f"no restart of the {objective} ascent converged for {spec.model_id} "
            f"(best relative gradient {results[best].relative_gradient:.3e})",
            best=report,
        )
    log.info(
        "%s: lambda*=%.17g lambda0*=%.17g (%d/%d restarts converged)",
        spec.model_id,
        report.lambda_star,
        report.lambda0_star,
        len(converged),
        opts.restarts,
    )
    return report


def _sobolev_quotient(spec: KirchhoffModel, values: np.ndarray) -> float:
    """S(u) = Q(u) / P(u)^(q/2)."""
    ev = spec.evaluate(values)
    return ev.Q_val / ev.P_val ** (spec.q / 2.0)


def sobolev_route_lambda_star(
    spec: ModelSpec, opts: Optional[OptimizerOptions] = None
) -> float:
    """
    lambda* for the Kirchhoff model through the Sobolev-type quotient S(u) = Q/P^(q/2).

    With T = P^2/a^2 the Rayleigh value becomes

        lambda(u) = k Q^(2/(q-2)) / (T P^((4-q)/(q-2))) = k a^2 S(u)^(2/(q-2)),
        k = ((q-2)/2) ((4-q)/2)^((4-q)/(q-2)),

    an increasing function of S. S is maximized by the normalized iteration
    u <- K^{-1}(|u|^(q-2) u) / |.|_H1 from the principal eigenvector, which increases S
    monotonically.
    """
    if not isinstance(spec, KirchhoffModel):
        raise InvalidModelError(f"the Sobolev route needs a kirchhoff model, got {spec.kind}")
    opts = opts or OptimizerOptions()
    grid = spec.grid
    q = spec.q

    u = grid.principal_direction()
    s = _sobolev_quotient(spec, u)
    for iteration in range(1, opts.max_iter + 1):
        u_next = grid.normalize(grid.riesz(np.abs(u) ** (q - 2.0) * u))
        s_next = _sobolev_quotient(spec, u_next)
        if s_next <= s * (1.0 + _SOBOLEV_RTOL):
            s = max(s, s_next)
            break
        u, s = u_next, s_next
    else:
        raise NonConvergenceError(
            f"normalized iteration did not settle in {opts.max_iter} iterations", best=s
        )

    k = (q - 2.0) / 2.0 * ((4.0 - q) / 2.0) ** ((4.0 - q) / (q - 2.0))
    lambda_star = k * spec.a**2 * s ** (2.0 / (q - 2.0))
    log.info(
        "%s: Sobolev route S_max=%.17g lambda*=%.17g (%d iterations)",
        spec.model_id,
        s,
        lambda_star,
        iteration,
    )
    return lambda_star


def stationarity_residual(report: ExtremalReport) -> float:
    """
    |grad P + lambda* grad T - grad Q|_{H^-1} / |grad Q|_{H^-1} at t(u) u for the maximizer u.

    Vanishes at an exact maximizer: the degenerate fiber point is a critical point of the
    energy at lambda*.
    """
    spec = report.spec
    ev = eval_triple(spec, report.maximizer)
    t = rayleigh_t(ev.P_val, ev.T_val, ev.Q_val, report.lambda_star, spec.exps)
    at = ev.scaled(t)
    residual = at.gradP + report.lambda_star * at.gradT - at.gradQ
    grid = spec.grid
    return grid.dual_norm(residual) / grid.dual_norm(at.gradQ)


@dataclass(frozen=True)
class NEPScaling:
    """
    mu-power laws of the NEP extreme parameters.

    lambda_0*(mu) = lambda0_coeff M mu^exponent and lambda*(mu) = lambda_coeff M mu^exponent
    with exponent = (gamma-2)/(q-2).
    """

    M: float
    lambda0_coeff: float
    lambda_coeff: float
    exponent: float
    q: float
    gamma: float

    def lambda_star(self, mu: float) -> float:
        return self.lambda_coeff * self.M * mu**self.exponent

    def lambda0_star(self, mu: float) -> float:
        return self.lambda0_coeff * self.M * mu**self.exponent


@dataclass(frozen=True)
class NEPCrossings:
    """mu_0 = lambda*(mu_0) and lambda_* = lambda_0*(lambda_*), with fixed-point residuals."""

    mu0: float
    lambda_star_cross: float
    mu0_residual: float
    lambda_cross_residual: float


def nep_scaling_constants(
    spec: ModelSpec,
    opts: Optional[OptimizerOptions] = None,
    scheduler: Optional[RestartScheduler] = None,
    extremal: Optional[ExtremalReport] = None,
) -> NEPScaling:
    """
    M = sup (int|u|^q)^e / (int|u|^gamma D(u)^((gamma-q)/(q-2))), e = (gamma-2)/(q-2).

    For the NEP triple the Rayleigh quotient of u is mu^e times the quantity above, so M is
    read off the lambda ascent at the model's own mu. An existing extremal report for the
    same model is reused.
    """
    if not isinstance(spec, NEPModel):
        raise InvalidModelError(f"mu-scaling needs an nep model, got {spec.kind}")
    if extremal is None:
        extremal = maximize_lambda(spec, opts, scheduler=scheduler)
    elif extremal.spec != spec:
        raise InvalidModelError("extremal report belongs to a different model")

    e = spec.exps
    exponent = (e.gamma - 2.0) / (e.q - 2.0)
    k = (e.q - 2.0) / (e.gamma - 2.0) * ((e.gamma - e.q) / (e.gamma - 2.0)) ** (
        (e.gamma - e.q) / (e.q - 2.0)
    )
    M = extremal.lambda_star / (k * spec.mu**exponent)
    scaling = NEPScaling(
        M=M,
        lambda0_coeff=k / e.ratio_constant,
        lambda_coeff=k,
        exponent=exponent,
        q=e.q,
        gamma=e.gamma,
    )
    log.info("%s: M=%.17g exponent=%.6g", spec.model_id, M, exponent)
    return scaling


def _crossing(coefficient: float, scaling: NEPScaling) -> float:
    """Positive solution of x = coefficient * M * x^exponent."""
    K = coefficient * scaling.M
    return K ** (-(scaling.q - 2.0) / (scaling.gamma - scaling.q))


def nep_crossings(scaling: NEPScaling) -> NEPCrossings:
    """Closed-form crossings of the power laws with the diagonal."""
    mu0 = _crossing(scaling.lambda_coeff, scaling)
    lambda_cross = _crossing(scaling.lambda0_coeff, scaling)
    mu0_residual = abs(scaling.lambda_star(mu0) - mu0) / mu0
    cross_residual = abs(scaling.lambda0_star(lambda_cross) - lambda_cross) / lambda_cross
    if not (math.isfinite(mu0) and math.isfinite(lambda_cross) and mu0 < lambda_cross):
        raise VerificationError(
            "crossing_order", f"expected mu0 < lambda_*, got mu0={mu0}, lambda_*={lambda_cross}"
        )
    return NEPCrossings(
        mu0=mu0,
        lambda_star_cross=lambda_cross,
        mu0_residual=mu0_residual,
        lambda_cross_residual=cross_residual,
    )
