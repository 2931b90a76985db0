"""
Scalar analysis of fiber maps.

For a direction u with A = P(u), B = T(u), C = Q(u) the energy restricted to the ray {t u}
is the three-term power function

    phi(t) = (A/p) t^p + (lam B/gamma) t^gamma - (C/q) t^q,   1 < p < q < gamma.

Everything here is a pure function of scalars; the grid models only supply (A, B, C).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from scipy.optimize import bisect, newton

from .errors import FiberOverflowError, InvalidExponentError, ValidationError

log = logging.getLogger(__name__)

# Relative half-width of the band in which a fiber counts as degenerate (case II)
DEGENERACY_TOL = 1e-10

_BISECT_RTOL = 1e-8
_NEWTON_RTOL = 1e-14
_MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class Exponents:
    """Homogeneity degrees (p, q, gamma) of the triple (P, Q, T)."""

    p: float
    q: float
    gamma: float

    def __post_init__(self):
        values = (self.p, self.q, self.gamma)
        if not all(math.isfinite(v) for v in values):
            raise InvalidExponentError(f"exponents must be finite, got {values}")
        if not 1.0 < self.p:
            raise InvalidExponentError(f"requires 1 < p, got p={self.p}")
        if not self.p < self.q:
            raise InvalidExponentError(f"requires p < q, got p={self.p}, q={self.q}")
        if not self.q < self.gamma:
            raise InvalidExponentError(f"requires q < gamma, got q={self.q}, gamma={self.gamma}")

    @property
    def ratio_constant(self) -> float:
        """C(p,q,gamma) = lambda(u) / lambda_0(u), independent of u and always > 1."""
        p, q, g = self.p, self.q, self.gamma
        return (q / g) * (q / p) ** ((g - q) / (q - p))


@dataclass(frozen=True)
class FiberCoefficients:
    """Scalars (A, B, C, lam) = (P(u), T(u), Q(u), lam) defining one fiber map."""

    A: float
    B: float
    C: float
    lam: float
    exps: Exponents

    def __post_init__(self):
        for name in ("A", "B", "C", "lam"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValidationError(f"fiber coefficient {name} must be positive, got {value}")

    def with_lambda(self, lam: float) -> "FiberCoefficients":
        return FiberCoefficients(self.A, self.B, self.C, lam, self.exps)


class FiberCase(Enum):
    """The three possible shapes of a fiber map."""

    I = "I"  # noqa: E741
    II = "II"
    III = "III"


@dataclass(frozen=True)
class FiberClassification:
    """
    Shape of a fiber map.

    Case I carries the local maximum t_minus and local minimum t_plus of phi, case II the
    degenerate critical point t_deg. `margin` is the reduced derivative at its interior
    minimum; its sign decides the case.
    """

    case: FiberCase
    margin: float
    t_minus: Optional[float] = None
    t_plus: Optional[float] = None
    t_deg: Optional[float] = None

    @property
    def tag(self) -> str:
        return self.case.value


@dataclass(frozen=True)
class RayleighValues:
    """lambda(u), lambda_0(u) and the scales t(u), t_0(u) at those parameters."""

    lambda_u: float
    lambda0_u: float
    t_u: float
    t0_u: float


def _pow(t: float, e: float) -> float:
    """t**e for t > 0 via exp/log, raising FiberOverflowError when it does not fit."""
    if not t > 0.0:
        raise ValidationError(f"power base must be positive, got {t}")
    try:
        return math.exp(e * math.log(t))
    except OverflowError as e_over:
        raise FiberOverflowError(f"t={t!r} too large for exponent {e}") from e_over


def _check_finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise FiberOverflowError(f"{what} is not finite")
    return value


def eval_fiber(coeffs: FiberCoefficients, t: float) -> float:
    """phi(t) = (A/p) t^p + (lam B/gamma) t^gamma - (C/q) t^q."""
    e = coeffs.exps
    value = (
        coeffs.A / e.p * _pow(t, e.p)
        + coeffs.lam * coeffs.B / e.gamma * _pow(t, e.gamma)
        - coeffs.C / e.q * _pow(t, e.q)
    )
    return _check_finite(value, "fiber value")


def eval_fiber_derivatives(coeffs: FiberCoefficients, t: float) -> Tuple[float, float]:
    """Return (phi'(t), phi''(t))."""
    e = coeffs.exps
    a, lb, c = coeffs.A, coeffs.lam * coeffs.B, coeffs.C
    d1 = a * _pow(t, e.p - 1) + lb * _pow(t, e.gamma - 1) - c * _pow(t, e.q - 1)
    d2 = (
        (e.p - 1) * a * _pow(t, e.p - 2)
        + (e.gamma - 1) * lb * _pow(t, e.gamma - 2)
        - (e.q - 1) * c * _pow(t, e.q - 2)
    )
    return _check_finite(d1, "phi'"), _check_finite(d2, "phi''")


def _reduced(coeffs: FiberCoefficients, t: float) -> float:
    """h(t) = phi'(t) / t^(p-1) = A + lam B t^(gamma-p) - C t^(q-p)."""
    e = coeffs.exps
    if t == 0.0:
        return coeffs.A
    return (
        coeffs.A
        + coeffs.lam * coeffs.B * _pow(t, e.gamma - e.p)
        - coeffs.C * _pow(t, e.q - e.p)
    )


def _reduced_prime(coeffs: FiberCoefficients, t: float) -> float:
    e = coeffs.exps
    return coeffs.lam * coeffs.B * (e.gamma - e.p) * _pow(t, e.gamma - e.p - 1) - coeffs.C * (
        e.q - e.p
    ) * _pow(t, e.q - e.p - 1)


def reduced_minimizer(coeffs: FiberCoefficients) -> float:
    """Interior minimum t_m of the reduced derivative h."""
    e = coeffs.exps
    try:
        log_tm = (
            math.log((e.q - e.p) * coeffs.C) - math.log((e.gamma - e.p) * coeffs.lam * coeffs.B)
        ) / (e.gamma - e.q)
        t_m = math.exp(log_tm)
    except (OverflowError, ValueError) as exc:
        raise InvalidExponentError(f"reduced minimizer is not finite: {exc}") from exc
    if not (math.isfinite(t_m) and t_m > 0.0):
        raise InvalidExponentError("reduced minimizer is not finite")
    return t_m


def _root(coeffs: FiberCoefficients, lo: float, hi: float) -> float:
    """Bracketed root of h: bisection to 1e-8 relative, then a Newton polish."""
    t0 = bisect(lambda t: _reduced(coeffs, t), lo, hi, xtol=1e-300, rtol=_BISECT_RTOL)
    try:
        t1 = newton(
            lambda t: _reduced(coeffs, t),
            t0,
            fprime=lambda t: _reduced_prime(coeffs, t),
            tol=_NEWTON_RTOL * t0,
            maxiter=50,
            disp=False,
        )
    except (ArithmeticError, ValidationError):
        return t0
    t1 = float(t1)
    if not (lo < t1 < hi) or abs(_reduced(coeffs, t1)) > abs(_reduced(coeffs, t0)):
        return t0
    return t1


def classify_fiber(
    coeffs: FiberCoefficients, tol: float = DEGENERACY_TOL
) -> FiberClassification:
    """
    Decide which of the three fiber shapes occurs and locate its critical points.

    Case I when h(t_m) < -tol*A, case II when |h(t_m)| <= tol*A, case III otherwise.
    """
    t_m = reduced_minimizer(coeffs)
    margin = _reduced(coeffs, t_m)
    band = tol * coeffs.A

    if margin > band:
        return FiberClassification(case=FiberCase.III, margin=margin)
    if margin >= -band:
        return FiberClassification(case=FiberCase.II, margin=margin, t_deg=t_m)

    t_hi = 2.0 * t_m
    doublings = 1
    while _reduced(coeffs, t_hi) <= 0.0:
        if doublings >= _MAX_DOUBLINGS:
            raise FiberOverflowError(f"no upper bracket below 2^{_MAX_DOUBLINGS} * t_m")
        t_hi *= 2.0
        doublings += 1

    t_minus = _root(coeffs, 0.0, t_m)
    t_plus = _root(coeffs, t_m, t_hi)
    return FiberClassification(case=FiberCase.I, margin=margin, t_minus=t_minus, t_plus=t_plus)


def _rayleigh_prefactor(exps: Exponents) -> float:
    p, q, g = exps.p, exps.q, exps.gamma
    return (q - p) / (g - p) * ((g - q) / (g - p)) ** ((g - q) / (q - p))


def _rayleigh0_prefactor(exps: Exponents) -> float:
    p, q, g = exps.p, exps.q, exps.gamma
    return (g / q) * (q - p) / (g - p) * ((p / q) * (g - q) / (g - p)) ** ((g - q) / (q - p))


def _quotient(A: float, B: float, C: float, exps: Exponents) -> float:
    """C^((gamma-p)/(q-p)) / (B A^((gamma-q)/(q-p))), computed in logs."""
    for name, value in (("A", A), ("B", B), ("C", C)):
        if not (math.isfinite(value) and value > 0.0):
            raise ValidationError(f"{name} must be positive, got {value}")
    p, q, g = exps.p, exps.q, exps.gamma
    log_value = (g - p) / (q - p) * math.log(C) - math.log(B) - (g - q) / (q - p) * math.log(A)
    try:
        return math.exp(log_value)
    except OverflowError as exc:
        raise FiberOverflowError("Rayleigh quotient overflows") from exc


def rayleigh_lambda(A: float, B: float, C: float, exps: Exponents) -> float:
    """lambda(u): the unique parameter at which the fiber has a degenerate critical point."""
    return _rayleigh_prefactor(exps) * _quotient(A, B, C, exps)


def rayleigh_lambda0(A: float, B: float, C: float, exps: Exponents) -> float:
    """lambda_0(u): the unique parameter at which the fiber has a zero-energy critical point."""
    return _rayleigh0_prefactor(exps) * _quotient(A, B, C, exps)


def rayleigh_t(A: float, B: float, C: float, lam: float, exps: Exponents) -> float:
    """t(u) = ((1/lam) (q-p)/(gamma-p) C/B)^(1/(gamma-q))."""
    p, q, g = exps.p, exps.q, exps.gamma
    return _pow((q - p) / (g - p) * C / (lam * B), 1.0 / (g - q))


def rayleigh_t0(A: float, B: float, C: float, lam: float, exps: Exponents) -> float:
    """t_0(u) = ((1/lam) (gamma/q) (q-p)/(gamma-p) C/B)^(1/(gamma-q))."""
    p, q, g = exps.p, exps.q, exps.gamma
    return _pow((g / q) * (q - p) / (g - p) * C / (lam * B), 1.0 / (g - q))


def rayleigh_values(A: float, B: float, C: float, exps: Exponents) -> RayleighValues:
    """Both extreme parameters of a direction together with their critical scales."""
    lam = rayleigh_lambda(A, B, C, exps)
    lam0 = rayleigh_lambda0(A, B, C, exps)
    return RayleighValues(
        lambda_u=lam,
        lambda0_u=lam0,
        t_u=rayleigh_t(A, B, C, lam, exps),
        t0_u=rayleigh_t0(A, B, C, lam0, exps),
    )


def fiber_energy_at_roots(
    coeffs: FiberCoefficients, classification: FiberClassification
) -> Tuple[Optional[float], Optional[float]]:
    """(phi(t_minus), phi(t_plus)) for case I, (None, None) otherwise."""
    if classification.case is not FiberCase.I:
        return None, None
    return eval_fiber(coeffs, classification.t_minus), eval_fiber(coeffs, classification.t_plus)


# Structured case T = C3 P^(gamma/p). The energy equals the C3 = 1 energy at parameter C3*lam,
# so the N0 identities below are the C3 = 1 formulas evaluated at C3*lam.


def n0_threshold(lam: float, exps: Exponents, c3: float = 1.0) -> float:
    """P on N0: ((q-p) / ((gamma-q) C3 lam))^(p/(gamma-p)). N+ lies above it, N- below."""
    p, q, g = exps.p, exps.q, exps.gamma
    return ((q - p) / ((g - q) * c3 * lam)) ** (p / (g - p))


def n0_level(lam: float, exps: Exponents, c3: float = 1.0) -> float:
    """Energy on N0, an upper bound for both branch energies when lam < lambda*."""
    p, q, g = exps.p, exps.q, exps.gamma
    return (
        (g - p)
        / (p * q * g)
        * (q - p) ** (g / (g - p))
        / (g - q) ** (p / (g - p))
        * (c3 * lam) ** (-p / (g - p))
    )


def nehari_lower_bound(c1: float, c2: float, exps: Exponents) -> float:
    """Every Nehari point has norm at least (C1/C2)^(1/(q-p))."""
    return (c1 / c2) ** (1.0 / (exps.q - exps.p))
