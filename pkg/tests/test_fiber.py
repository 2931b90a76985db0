"""Tests for the scalar fiber calculus."""

import math

import numpy as np
import pytest

from nehari_bif.core import (
    Exponents,
    FiberCase,
    FiberCoefficients,
    classify_fiber,
    eval_fiber,
    eval_fiber_derivatives,
    rayleigh_lambda,
    rayleigh_lambda0,
    rayleigh_t,
    rayleigh_t0,
    rayleigh_values,
)
from nehari_bif.core.errors import InvalidExponentError, ValidationError
from nehari_bif.core.fiber import (
    fiber_energy_at_roots,
    n0_level,
    n0_threshold,
    nehari_lower_bound,
    reduced_minimizer,
)

KIRCHHOFF_EXPS = Exponents(2.0, 3.0, 4.0)


def _random_case(rng):
    p = rng.uniform(1.1, 3.0)
    q = p + rng.uniform(0.5, 2.0)
    gamma = q + rng.uniform(0.5, 2.0)
    exps = Exponents(p, q, gamma)
    A, B, C = rng.uniform(0.2, 5.0, size=3)
    lam = rayleigh_lambda(A, B, C, exps) * math.exp(rng.uniform(-2.0, 1.0))
    return FiberCoefficients(A, B, C, lam, exps)


def _scan_sign_changes(coeffs):
    """Sign changes of the reduced derivative on a dense log grid around its minimum."""
    e = coeffs.exps
    t_m = reduced_minimizer(coeffs)
    t = t_m * np.logspace(-6.0, 6.0, 4001)
    h = coeffs.A + coeffs.lam * coeffs.B * t ** (e.gamma - e.p) - coeffs.C * t ** (e.q - e.p)
    flips = np.nonzero(np.diff(np.sign(h)) != 0)[0]
    return [(t[i], t[i + 1]) for i in flips]


class TestExponents:
    """Tests for the exponent triple."""

    def test_valid(self):
        """An ordered triple is accepted."""
        exps = Exponents(2.0, 3.0, 4.0)
        assert (exps.p, exps.q, exps.gamma) == (2.0, 3.0, 4.0)

    @pytest.mark.parametrize(
        "p,q,gamma",
        [(1.0, 2.0, 3.0), (2.0, 2.0, 4.0), (2.0, 4.0, 3.0), (2.0, 3.0, math.inf)],
    )
    def test_invalid(self, p, q, gamma):
        """Triples outside 1 < p < q < gamma are rejected."""
        with pytest.raises(InvalidExponentError):
            Exponents(p, q, gamma)

    def test_invalid_exponents_are_validation_errors(self):
        """Exponent errors map to the input-error exit code."""
        with pytest.raises(ValidationError) as info:
            Exponents(3.0, 2.0, 4.0)
        assert info.value.exit_code == 2

    def test_ratio_constant_kirchhoff(self):
        """The lambda/lambda_0 ratio for (2, 3, 4) is 9/8."""
        assert KIRCHHOFF_EXPS.ratio_constant == pytest.approx(9.0 / 8.0, rel=1e-15)


class TestFiberCoefficients:
    """Tests for fiber coefficient validation."""

    @pytest.mark.parametrize("field", ["A", "B", "C", "lam"])
    def test_nonpositive_rejected(self, field):
        """Every coefficient must be positive and finite."""
        values = {"A": 1.0, "B": 1.0, "C": 1.0, "lam": 0.1}
        values[field] = 0.0
        with pytest.raises(ValidationError):
            FiberCoefficients(exps=KIRCHHOFF_EXPS, **values)

    def test_with_lambda(self):
        """with_lambda keeps A, B, C and the exponents."""
        coeffs = FiberCoefficients(1.0, 2.0, 3.0, 0.1, KIRCHHOFF_EXPS).with_lambda(0.5)
        assert (coeffs.A, coeffs.B, coeffs.C, coeffs.lam) == (1.0, 2.0, 3.0, 0.5)


class TestClosedForms:
    """Spot checks at A = B = C = 1 with (p, q, gamma) = (2, 3, 4)."""

    def test_rayleigh_values(self):
        """lambda(u) = 1/4 and lambda_0(u) = 2/9."""
        assert rayleigh_lambda(1.0, 1.0, 1.0, KIRCHHOFF_EXPS) == pytest.approx(0.25, rel=1e-12)
        assert rayleigh_lambda0(1.0, 1.0, 1.0, KIRCHHOFF_EXPS) == pytest.approx(
            2.0 / 9.0, rel=1e-12
        )

    def test_critical_scales(self):
        """t(u) = 2 at lambda = 1/4 and t_0(u) = 3 at lambda = 2/9."""
        assert rayleigh_t(1.0, 1.0, 1.0, 0.25, KIRCHHOFF_EXPS) == pytest.approx(2.0, rel=1e-12)
        assert rayleigh_t0(1.0, 1.0, 1.0, 2.0 / 9.0, KIRCHHOFF_EXPS) == pytest.approx(
            3.0, rel=1e-12
        )

    def test_degenerate_point_is_critical(self):
        """At lambda(u) the fiber has phi' = phi'' = 0 at t(u)."""
        coeffs = FiberCoefficients(1.0, 1.0, 1.0, 0.25, KIRCHHOFF_EXPS)
        d1, d2 = eval_fiber_derivatives(coeffs, 2.0)
        assert abs(d1) < 1e-12
        assert abs(d2) < 1e-12

    def test_zero_energy_point(self):
        """At lambda_0(u) the fiber has phi = phi' = 0 at t_0(u)."""
        coeffs = FiberCoefficients(1.0, 1.0, 1.0, 2.0 / 9.0, KIRCHHOFF_EXPS)
        assert abs(eval_fiber(coeffs, 3.0)) < 1e-12
        assert abs(eval_fiber_derivatives(coeffs, 3.0)[0]) < 1e-12

    def test_case_one_roots(self):
        """Roots of 1 + lam t^2 - t are (1 -+ sqrt(1 - 4 lam)) / (2 lam)."""
        lam = 0.2
        result = classify_fiber(FiberCoefficients(1.0, 1.0, 1.0, lam, KIRCHHOFF_EXPS))
        disc = math.sqrt(1.0 - 4.0 * lam)
        assert result.case is FiberCase.I
        assert result.t_minus == pytest.approx((1.0 - disc) / (2.0 * lam), rel=1e-10)
        assert result.t_plus == pytest.approx((1.0 + disc) / (2.0 * lam), rel=1e-10)

    def test_case_two_at_lambda_u(self):
        """At exactly lambda(u) the fiber is degenerate at t(u)."""
        result = classify_fiber(FiberCoefficients(1.0, 1.0, 1.0, 0.25, KIRCHHOFF_EXPS))
        assert result.case is FiberCase.II
        assert result.t_deg == pytest.approx(2.0, rel=1e-12)

    def test_case_three_above(self):
        """Above lambda(u) there is no critical point."""
        result = classify_fiber(FiberCoefficients(1.0, 1.0, 1.0, 0.3, KIRCHHOFF_EXPS))
        assert result.case is FiberCase.III
        assert result.t_minus is None and result.t_plus is None
        assert result.margin > 0.0

    def test_energy_at_roots(self):
        """phi(t_minus) > 0 and phi(t_plus) < 0 below lambda_0(u)."""
        coeffs = FiberCoefficients(1.0, 1.0, 1.0, 0.2, KIRCHHOFF_EXPS)
        phi_minus, phi_plus = fiber_energy_at_roots(coeffs, classify_fiber(coeffs))
        assert phi_minus > 0.0
        assert phi_plus < 0.0

    def test_energy_at_roots_without_roots(self):
        """Cases II and III report no root energies."""
        coeffs = FiberCoefficients(1.0, 1.0, 1.0, 0.3, KIRCHHOFF_EXPS)
        assert fiber_energy_at_roots(coeffs, classify_fiber(coeffs)) == (None, None)


class TestClassificationOracle:
    """classify_fiber against a dense sign-change scan on random inputs."""

    def test_agrees_with_scan(self):
        """Root count and locations match the scan outside the degeneracy band."""
        rng = np.random.default_rng(2024)
        checked = 0
        for _ in range(1000):
            coeffs = _random_case(rng)
            ratio = coeffs.lam / rayleigh_lambda(coeffs.A, coeffs.B, coeffs.C, coeffs.exps)
            if abs(ratio - 1.0) < 0.01:
                continue
            checked += 1
            result = classify_fiber(coeffs)
            brackets = _scan_sign_changes(coeffs)
            if ratio < 1.0:
                assert result.case is FiberCase.I
                assert len(brackets) == 2
                (a0, b0), (a1, b1) = brackets
                assert a0 <= result.t_minus <= b0
                assert a1 <= result.t_plus <= b1
            else:
                assert result.case is FiberCase.III
                assert brackets == []
        assert checked > 900

    def test_roots_are_critical_points(self):
        """Case I roots solve phi' = 0 to 1e-6 relative with the right second-order signs."""
        rng = np.random.default_rng(7)
        for _ in range(300):
            coeffs = _random_case(rng)
            result = classify_fiber(coeffs)
            if result.case is not FiberCase.I:
                continue
            e = coeffs.exps
            for t, sign in ((result.t_minus, -1.0), (result.t_plus, 1.0)):
                d1, d2 = eval_fiber_derivatives(coeffs, t)
                terms = (
                    coeffs.A * t ** (e.p - 1)
                    + coeffs.lam * coeffs.B * t ** (e.gamma - 1)
                    + coeffs.C * t ** (e.q - 1)
                )
                assert abs(d1) <= 1e-6 * terms
                assert d2 * sign > 0.0
            assert result.t_minus < reduced_minimizer(coeffs) < result.t_plus


class TestRayleigh:
    """Tests for the extreme parameters of single directions."""

    def test_ratio_law(self):
        """lambda(u) / lambda_0(u) equals the exponent-only constant."""
        rng = np.random.default_rng(3)
        for _ in range(100):
            coeffs = _random_case(rng)
            lam = rayleigh_lambda(coeffs.A, coeffs.B, coeffs.C, coeffs.exps)
            lam0 = rayleigh_lambda0(coeffs.A, coeffs.B, coeffs.C, coeffs.exps)
            assert lam / lam0 == pytest.approx(coeffs.exps.ratio_constant, rel=1e-12)

    def test_zero_homogeneous(self):
        """Scaling the direction leaves lambda(u) unchanged."""
        e = Exponents(2.0, 2.5, 3.5)
        t = 1.7
        base = rayleigh_lambda(2.0, 3.0, 0.5, e)
        scaled = rayleigh_lambda(t**e.p * 2.0, t**e.gamma * 3.0, t**e.q * 0.5, e)
        assert scaled == pytest.approx(base, rel=1e-12)

    def test_rayleigh_values_bundle(self):
        """rayleigh_values matches the individual formulas."""
        values = rayleigh_values(1.0, 1.0, 1.0, KIRCHHOFF_EXPS)
        assert values.lambda_u == pytest.approx(0.25, rel=1e-12)
        assert values.lambda0_u == pytest.approx(2.0 / 9.0, rel=1e-12)
        assert values.t_u == pytest.approx(2.0, rel=1e-12)
        assert values.t0_u == pytest.approx(3.0, rel=1e-12)

    def test_roots_move_apart_as_lambda_decreases(self):
        """t_minus increases and t_plus decreases with lambda."""
        lams = np.linspace(0.02, 0.24, 12)
        results = [
            classify_fiber(FiberCoefficients(1.0, 1.0, 1.0, lam, KIRCHHOFF_EXPS)) for lam in lams
        ]
        t_minus = [r.t_minus for r in results]
        t_plus = [r.t_plus for r in results]
        assert all(a < b for a, b in zip(t_minus, t_minus[1:]))
        assert all(a > b for a, b in zip(t_plus, t_plus[1:]))


class TestN0Formulas:
    """Tests for the structured-case identities."""

    @pytest.mark.parametrize(
        "exps,c3,lam",
        [
            (Exponents(2.0, 3.0, 4.0), 1.0, 0.3),
            (Exponents(2.0, 3.0, 4.0), 0.25, 1.2),
            (Exponents(1.5, 2.5, 5.0), 2.0, 0.7),
        ],
    )
    def test_threshold_and_level(self, exps, c3, lam):
        """At the threshold P the ray is degenerate and its energy is the N0 level."""
        P = n0_threshold(lam, exps, c3)
        T = c3 * P ** (exps.gamma / exps.p)
        Q = P + lam * T
        second = exps.p * P + exps.gamma * lam * T - exps.q * Q
        assert abs(second) <= 1e-12 * Q
        energy = P / exps.p + lam * T / exps.gamma - Q / exps.q
        assert n0_level(lam, exps, c3) == pytest.approx(energy, rel=1e-12)

    def test_kirchhoff_level(self):
        """For (2, q, 4) the N0 level is (q-2)^2 a^2 / (4 q (4-q) lam)."""
        q, a, lam = 3.0, 1.5, 0.4
        expected = (q - 2.0) ** 2 * a**2 / (4.0 * q * (4.0 - q) * lam)
        assert n0_level(lam, Exponents(2.0, q, 4.0), 1.0 / a**2) == pytest.approx(
            expected, rel=1e-12
        )

    def test_lower_bound(self):
        """The Nehari norm bound is (C1/C2)^(1/(q-p))."""
        assert nehari_lower_bound(4.0, 1.0, KIRCHHOFF_EXPS) == pytest.approx(4.0)
