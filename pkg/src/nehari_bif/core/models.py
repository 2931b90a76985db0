"""
Discretized homogeneous triples (P, T, Q) with exact gradients.

Two models are provided:

    Kirchhoff:  P = a D(u),  T = D(u)^2,      Q = int |u|^q        (p=2, gamma=4, 2<q<4)
    NEP:        P = D(u),    T = int |u|^gamma, Q = mu int |u|^q   (p=2, 2<q<gamma)

where D(u) is the discrete Dirichlet energy of the grid and integrals use the nodal rule with
weight h^dim. Both are exactly homogeneous polynomials in the nodal values.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .errors import HypothesisViolationError, ModelEvaluationError, ValidationError
from .fiber import Exponents, FiberCoefficients, _quotient
from .grid import Grid, GridFunction

log = logging.getLogger(__name__)

# Above this the 3D analogue of the NEP power would be Sobolev-critical
_GAMMA_ADVISORY = 6.0

HOMOGENEITY_RTOL = 1e-10
EULER_RTOL = 1e-10
GRADIENT_RTOL = 1e-6
STRUCTURE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ModelEval:
    """Values and nodal gradients of (P, T, Q) at one field."""

    P_val: float
    T_val: float
    Q_val: float
    gradP: np.ndarray
    gradT: np.ndarray
    gradQ: np.ndarray
    exps: Exponents

    def energy(self, lam: float) -> float:
        """Phi_lam = P/p + lam T/gamma - Q/q."""
        e = self.exps
        return self.P_val / e.p + lam * self.T_val / e.gamma - self.Q_val / e.q

    def energy_gradient(self, lam: float) -> np.ndarray:
        e = self.exps
        return self.gradP / e.p + lam * self.gradT / e.gamma - self.gradQ / e.q

    def nehari_value(self, lam: float) -> float:
        """phi'(1) = P + lam T - Q."""
        return self.P_val + lam * self.T_val - self.Q_val

    def second_derivative(self, lam: float) -> float:
        """phi''(1) along the ray through this field."""
        e = self.exps
        return (e.p - 1) * self.P_val + lam * (e.gamma - 1) * self.T_val - (e.q - 1) * self.Q_val

    def fiber(self, lam: float) -> FiberCoefficients:
        return FiberCoefficients(self.P_val, self.T_val, self.Q_val, lam, self.exps)

    def scaled(self, t: float) -> "ModelEval":
        """Evaluation at t*u from homogeneity, without touching the grid."""
        e = self.exps
        return ModelEval(
            P_val=t**e.p * self.P_val,
            T_val=t**e.gamma * self.T_val,
            Q_val=t**e.q * self.Q_val,
            gradP=t ** (e.p - 1) * self.gradP,
            gradT=t ** (e.gamma - 1) * self.gradT,
            gradQ=t ** (e.q - 1) * self.gradQ,
            exps=e,
        )


class ModelSpec(ABC):
    """A homogeneous triple on a grid. Instances are immutable."""

    grid: Grid

    @property
    @abstractmethod
    def kind(self) -> str:
        """Model family name used in configuration and CSV output."""

    @property
    @abstractmethod
    def exps(self) -> Exponents:
        """Homogeneity degrees."""

    @property
    @abstractmethod
    def model_id(self) -> str:
        """Stable identifier including parameters and grid."""

    @abstractmethod
    def evaluate(self, values: np.ndarray) -> ModelEval:
        """Evaluate the triple at nodal values."""

    def structure_constant(self) -> Optional[float]:
        """C3 when T = C3 P^(gamma/p) holds identically, else None."""
        return None


def _power_integral(grid: Grid, values: np.ndarray, r: float):
    """(int |u|^r, gradient) with the nodal rule."""
    absv = np.abs(values)
    w = grid.weight
    value = w * float(np.sum(absv**r))
    grad = w * r * absv ** (r - 1) * np.sign(values)
    return value, grad


def _finite(*values: float) -> None:
    if not all(math.isfinite(v) for v in values):
        raise ModelEvaluationError(f"non-finite model values {values}")


@dataclass(frozen=True)
class KirchhoffModel(ModelSpec):
    """-(a + lam int |grad u|^2) Laplace u = |u|^(q-2) u with Dirichlet data."""

    a: float = 1.0
    q: float = 3.0
    grid: Grid = field(default_factory=Grid)

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0.0):
            raise ValidationError(f"requires a > 0, got a={self.a}")
        if not self.q < 4.0:
            raise ValidationError(f"requires q < gamma (gamma = 4 for kirchhoff), got q={self.q}")
        Exponents(2.0, self.q, 4.0)

    @property
    def kind(self) -> str:
        return "kirchhoff"

    @property
    def exps(self) -> Exponents:
        return Exponents(2.0, self.q, 4.0)

    @property
    def model_id(self) -> str:
        g = self.grid
        return f"kirchhoff-a{self.a:g}-q{self.q:g}-d{g.dim}-n{g.n}"

    def structure_constant(self) -> Optional[float]:
        return 1.0 / self.a**2

    def evaluate(self, values: np.ndarray) -> ModelEval:
        values = self.grid.check(values)
        d = self.grid.dirichlet_energy(values)
        grad_d = self.grid.dirichlet_gradient(values)
        q_val, grad_q = _power_integral(self.grid, values, self.q)
        _finite(d, q_val)
        return ModelEval(
            P_val=self.a * d,
            T_val=d * d,
            Q_val=q_val,
            gradP=self.a * grad_d,
            gradT=2.0 * d * grad_d,
            gradQ=grad_q,
            exps=self.exps,
        )


@dataclass(frozen=True)
class NEPModel(ModelSpec):
    """-Laplace u + lam |u|^(gamma-2) u = mu |u|^(q-2) u with Dirichlet data."""

    gamma: float = 4.0
    q: float = 3.0
    mu: float = 1.0
    grid: Grid = field(default_factory=Grid)

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0.0):
            raise ValidationError(f"requires mu > 0, got mu={self.mu}")
        Exponents(2.0, self.q, self.gamma)
        if self.gamma >= _GAMMA_ADVISORY:
            log.warning(
                "gamma=%g is not subcritical in three dimensions; results are grid-level only",
                self.gamma,
            )

    @property
    def kind(self) -> str:
        return "nep"

    @property
    def exps(self) -> Exponents:
        return Exponents(2.0, self.q, self.gamma)

    @property
    def model_id(self) -> str:
        g = self.grid
        return f"nep-g{self.gamma:g}-q{self.q:g}-mu{self.mu:g}-d{g.dim}-n{g.n}"

    def with_mu(self, mu: float) -> "NEPModel":
        return replace(self, mu=mu)

    def evaluate(self, values: np.ndarray) -> ModelEval:
        values = self.grid.check(values)
        d = self.grid.dirichlet_energy(values)
        grad_d = self.grid.dirichlet_gradient(values)
        t_val, grad_t = _power_integral(self.grid, values, self.gamma)
        q_val, grad_q = _power_integral(self.grid, values, self.q)
        _finite(d, t_val, q_val)
        return ModelEval(
            P_val=d,
            T_val=t_val,
            Q_val=self.mu * q_val,
            gradP=grad_d,
            gradT=grad_t,
            gradQ=self.mu * grad_q,
            exps=self.exps,
        )


def eval_triple(spec: ModelSpec, u: GridFunction) -> ModelEval:
    """Values and gradients of (P, T, Q) at u."""
    if u.grid != spec.grid:
        raise ValidationError(
            f"field grid ({u.grid.describe}) != model grid ({spec.grid.describe})"
        )
    return spec.evaluate(u.values)


def h1_norm(u: GridFunction) -> float:
    """Discrete H^1_0 norm sqrt(D(u))."""
    return math.sqrt(u.grid.dirichlet_energy(u.values))


@dataclass(frozen=True)
class ModelConstants:
    """Sampled estimates of the (E2) and (E3) constants."""

    C1: float
    C2: float
    C_E3: float


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of verify_hypotheses."""

    model_id: str
    samples: int
    seed: int
    constants: ModelConstants
    max_homogeneity_error: float
    max_euler_error: float
    max_gradient_error: float
    max_structure_error: Optional[float]


def _relative(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def _gradient_error(spec: ModelSpec, values: np.ndarray, rng: np.random.Generator) -> float:
    """Directional derivatives against central differences, relative to |grad| |d|."""
    ev = spec.evaluate(values)
    step = 1e-5 * float(np.linalg.norm(values))
    d = rng.standard_normal(values.size)
    d /= np.linalg.norm(d)
    plus = spec.evaluate(values + step * d)
    minus = spec.evaluate(values - step * d)
    worst = 0.0
    for name in ("P", "T", "Q"):
        grad = getattr(ev, f"grad{name}")
        fd = (getattr(plus, f"{name}_val") - getattr(minus, f"{name}_val")) / (2.0 * step)
        scale = float(np.linalg.norm(grad))
        if scale > 0.0:
            worst = max(worst, abs(fd - float(grad @ d)) / scale)
    return worst


def verify_hypotheses(
    spec: ModelSpec,
    samples: int = 100,
    seed: int = 0,
    gradient_samples: int = 3,
    directions: int = 5,
) -> HypothesisReport:
    """
    Check (E1), exact homogeneity, the Euler identities and gradients on sampled fields, and
    estimate the (E2)/(E3) constants.

    The first sample is the principal Dirichlet eigenvector; the rest are smoothed random
    fields. Raises HypothesisViolationError naming the first failed hypothesis.
    """
    if samples < 1:
        raise ValidationError(f"samples must be >= 1, got {samples}")

    e = spec.exps
    grid = spec.grid
    rng = np.random.default_rng(seed)
    c3 = spec.structure_constant()

    fields: List[np.ndarray] = [grid.principal_direction()]
    fields += [grid.random_field(rng) for _ in range(samples - 1)]

    c1 = math.inf
    c2 = 0.0
    e3 = 0.0
    hom_err = 0.0
    euler_err = 0.0
    grad_err = 0.0
    struct_err: Optional[float] = 0.0 if c3 is not None else None

    for index, values in enumerate(fields):
        ev = spec.evaluate(values)
        if not (ev.P_val > 0.0 and ev.T_val > 0.0 and ev.Q_val > 0.0):
            raise HypothesisViolationError(
                "E1", f"sample {index}: P={ev.P_val}, T={ev.T_val}, Q={ev.Q_val} not all positive"
            )

        for t in (0.5, 2.0):
            ev_t = spec.evaluate(t * values)
            hom_err = max(
                hom_err,
                _relative(ev_t.P_val, t**e.p * ev.P_val),
                _relative(ev_t.T_val, t**e.gamma * ev.T_val),
                _relative(ev_t.Q_val, t**e.q * ev.Q_val),
            )
        if hom_err > HOMOGENEITY_RTOL:
            raise HypothesisViolationError(
                "homogeneity", f"sample {index}: relative error {hom_err:.3e}"
            )

        euler_err = max(
            euler_err,
            _relative(float(ev.gradP @ values), e.p * ev.P_val),
            _relative(float(ev.gradT @ values), e.gamma * ev.T_val),
            _relative(float(ev.gradQ @ values), e.q * ev.Q_val),
        )
        if euler_err > EULER_RTOL:
            raise HypothesisViolationError(
                "euler", f"sample {index}: relative error {euler_err:.3e}"
            )

        if c3 is not None:
            struct_err = max(struct_err, _relative(ev.T_val, c3 * ev.P_val ** (e.gamma / e.p)))
            if struct_err > STRUCTURE_RTOL:
                raise HypothesisViolationError(
                    "structure", f"sample {index}: T != C3 P^(gamma/p), error {struct_err:.3e}"
                )

        quotient = _quotient(ev.P_val, ev.T_val, ev.Q_val, e)
        if not math.isfinite(quotient):
            raise HypothesisViolationError("E3", f"sample {index}: quotient is not finite")
        e3 = max(e3, quotient)

        norm = h1_norm(GridFunction(grid, values))
        c1 = min(c1, ev.P_val / norm**e.p)
        c2 = max(c2, ev.Q_val / norm**e.q)

        if index < gradient_samples:
            for _ in range(directions):
                grad_err = max(grad_err, _gradient_error(spec, values, rng))
            if grad_err > GRADIENT_RTOL:
                raise HypothesisViolationError(
                    "gradient", f"sample {index}: finite-difference mismatch {grad_err:.3e}"
                )

    if not (math.isfinite(c1) and c1 > 0.0):
        raise HypothesisViolationError("E2", f"coercivity estimate C1={c1} is not positive")

    constants = ModelConstants(C1=c1, C2=c2, C_E3=e3)
    log.info(
        "Hypotheses hold for %s over %d samples (C1=%.6g, C2=%.6g, C_E3=%.6g)",
        spec.model_id,
        samples,
        c1,
        c2,
        e3,
    )
    return HypothesisReport(
        model_id=spec.model_id,
        samples=samples,
        seed=seed,
        constants=constants,
        max_homogeneity_error=hom_err,
        max_euler_error=euler_err,
        max_gradient_error=grad_err,
        max_structure_error=struct_err,
    )
