"""Symbolic construction and evaluation of the compactly supported profiles."""

from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from koopwend.errors import KernelConfigError
from koopwend.wendland import (
    UnivariatePolynomial,
    apply_I,
    base_poly,
    build_wendland,
    eval_kernel,
    eval_phi,
    smoothness_defect,
)

F = Fraction

# Pairs exercised by the benchmark experiments, plus the k=0 edge.
SHIPPED_PAIRS = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3), (3, 0)]

ALL_VALID_PAIRS = [
    (d, k) for d in range(1, 17) for k in range(0, 5) if not (k == 0 and d < 3)
]

rational = st.fractions(
    min_value=-10, max_value=10, max_denominator=20
)
poly_coeffs = st.lists(rational, min_size=1, max_size=7)


def sympy_poly(p: UnivariatePolynomial, r: sympy.Symbol) -> sympy.Expr:
    return sum(sympy.Rational(c.numerator, c.denominator) * r**j for j, c in enumerate(p.coeffs))


def coeffs_from_sympy(expr: sympy.Expr, r: sympy.Symbol) -> tuple[Fraction, ...]:
    poly = sympy.Poly(sympy.expand(expr), r)
    out = [Fraction(0)] * (poly.degree() + 1)
    for (j,), c in poly.terms():
        out[j] = Fraction(int(sympy.numer(c)), int(sympy.denom(c)))
    return tuple(out)


class TestBasePoly:
    def test_constant(self):
        assert base_poly(0).coeffs == (F(1),)

    def test_quadratic(self):
        assert base_poly(2).coeffs == (F(1), F(-2), F(1))

    def test_cubic(self):
        assert base_poly(3).coeffs == (F(1), F(-3), F(3), F(-1))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            base_poly(-1)


class TestApplyI:
    def test_constant(self):
        # int_r^1 t dt = (1 - r^2) / 2
        assert apply_I(UnivariatePolynomial((F(1),))).coeffs == (F(1, 2), F(0), F(-1, 2))

    def test_cubic_base(self):
        # int_r^1 t (1-t)^3 dt = (1-r)^4 (4r+1) / 20, frozen expansion
        q = apply_I(base_poly(3))
        assert q.coeffs == (F(1, 20), F(0), F(-1, 2), F(1), F(-3, 4), F(1, 5))

    def test_zero(self):
        z = UnivariatePolynomial((F(0),))
        assert apply_I(z).is_zero

    @given(poly_coeffs)
    @settings(max_examples=60, deadline=None)
    def test_against_symbolic_integration(self, coeffs):
        p = UnivariatePolynomial(tuple(coeffs))
        q = apply_I(p)
        r, t = sympy.symbols("r t")
        expected = sympy.integrate(t * sympy_poly(p, t), (t, r, 1))
        if p.is_zero:
            assert q.is_zero
        else:
            assert q.coeffs == coeffs_from_sympy(expected, r)

    @given(poly_coeffs)
    @settings(max_examples=60, deadline=None)
    def test_structural_invariants(self, coeffs):
        p = UnivariatePolynomial(tuple(coeffs))
        q = apply_I(p)
        assert q(F(1)) == 0
        # q'(r) = -r p(r), as exact coefficient tuples
        minus_rp = UnivariatePolynomial((F(0), F(-1))) * p
        assert q.derivative().coeffs == minus_rp.coeffs
        if not p.is_zero:
            assert q.degree == p.degree + 2


class TestPolynomialArithmetic:
    @given(poly_coeffs, poly_coeffs, rational)
    @settings(max_examples=60, deadline=None)
    def test_evaluation_homomorphism(self, a, b, x):
        p = UnivariatePolynomial(tuple(a))
        q = UnivariatePolynomial(tuple(b))
        assert (p + q)(x) == p(x) + q(x)
        assert (p * q)(x) == p(x) * q(x)
        assert p.scale(F(3, 2))(x) == F(3, 2) * p(x)

    @given(poly_coeffs)
    @settings(max_examples=40, deadline=None)
    def test_derivative_of_antiderivative(self, a):
        p = UnivariatePolynomial(tuple(a))
        assert p.antiderivative().derivative().coeffs == p.coeffs

    def test_trailing_zeros_normalized(self):
        p = UnivariatePolynomial((F(1), F(2), F(0), F(0)))
        assert p.coeffs == (F(1), F(2))
        assert UnivariatePolynomial((F(0), F(0))).is_zero


class TestBuildWendland:
    @pytest.mark.parametrize("d,k", ALL_VALID_PAIRS)
    def test_degree_formula(self, d, k):
        kern = build_wendland(d, k)
        assert kern.poly.degree == d // 2 + 3 * k + 1
        assert kern.poly.coeffs[0] > 0
        assert kern.poly(F(1)) == 0
        assert kern.sigma == F(d + 1, 2) + k

    def test_d3_k1_profile(self):
        kern = build_wendland(3, 1)
        assert kern.poly.coeffs == (F(1, 20), F(0), F(-1, 2), F(1), F(-3, 4), F(1, 5))

    def test_d3_k0_profile(self):
        assert build_wendland(3, 0).poly.coeffs == (F(1), F(-2), F(1))

    def test_d2_k1_degree(self):
        assert build_wendland(2, 1).poly.degree == 5

    @pytest.mark.parametrize(
        "d,k",
        [(2, 0), (1, 0), (0, 1), (17, 1), (3, 5), (3, -1)],
    )
    def test_invalid_combinations(self, d, k):
        with pytest.raises(KernelConfigError):
            build_wendland(d, k)

    def test_k0_rejection_names_hypothesis(self):
        with pytest.raises(KernelConfigError, match="d >= 3 if k = 0"):
            build_wendland(2, 0)

    def test_bad_scale(self):
        with pytest.raises(KernelConfigError):
            build_wendland(3, 1, scale=0.0)


class TestEvalPhi:
    def test_frozen_values(self):
        kern = build_wendland(3, 1)
        assert eval_phi(kern, 0.0) == pytest.approx(1 / 20, rel=1e-14)
        assert eval_phi(kern, 0.5) == pytest.approx(0.009375, rel=1e-14)

    @pytest.mark.parametrize("d,k", SHIPPED_PAIRS)
    def test_compact_support(self, d, k):
        kern = build_wendland(d, k, scale=0.7)
        assert eval_phi(kern, 0.7) == 0.0
        assert eval_phi(kern, 2.0) == 0.0

    def test_scale_rescales_argument(self):
        unit = build_wendland(3, 1)
        wide = build_wendland(3, 1, scale=2.0)
        assert eval_phi(wide, 1.0) == pytest.approx(eval_phi(unit, 0.5), rel=1e-14)

    def test_array_input(self):
        kern = build_wendland(3, 1)
        r = np.array([0.0, 0.5, 1.0, 5.0])
        out = eval_phi(kern, r)
        assert out.shape == (4,)
        assert out[2] == 0.0 and out[3] == 0.0

    @pytest.mark.parametrize("d,k", SHIPPED_PAIRS)
    def test_monotone_nonincreasing_on_support(self, d, k):
        kern = build_wendland(d, k)
        vals = eval_phi(kern, np.linspace(0.0, 1.0, 1000))
        assert np.all(np.diff(vals) <= 1e-15)


class TestEvalKernel:
    def test_zero_distance_is_diag(self):
        kern = build_wendland(3, 2)
        x = np.array([0.3, -0.1, 0.7])
        assert eval_kernel(kern, x, x) == pytest.approx(kern.diag, rel=1e-14)

    def test_frozen_example(self):
        kern = build_wendland(3, 1)
        assert eval_kernel(kern, (0, 0, 0), (0.5, 0, 0)) == pytest.approx(0.009375, rel=1e-14)

    def test_symmetry(self):
        kern = build_wendland(2, 1)
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, z = rng.uniform(-1, 1, (2, 2))
            assert eval_kernel(kern, x, z) == eval_kernel(kern, z, x)

    def test_beyond_support_zero(self):
        kern = build_wendland(2, 1)
        assert eval_kernel(kern, (0.0, 0.0), (1.5, 0.0)) == 0.0

    def test_dimension_mismatch(self):
        kern = build_wendland(3, 1)
        with pytest.raises(ValueError):
            eval_kernel(kern, (0.0, 0.0), (0.0, 0.0, 0.0))


class TestSmoothnessDefect:
    @pytest.mark.parametrize("d,k", SHIPPED_PAIRS)
    def test_zero_through_2k(self, d, k):
        kern = build_wendland(d, k)
        for order in range(2 * k + 1):
            assert smoothness_defect(kern, order) == 0

    def test_d3_k0_jump_at_order_two(self):
        kern = build_wendland(3, 0)
        assert smoothness_defect(kern, 0) == 0
        assert smoothness_defect(kern, 1) == 0
        assert smoothness_defect(kern, 2) == F(2)

    def test_d3_k1_explicit(self):
        kern = build_wendland(3, 1)
        assert smoothness_defect(kern, 2) == 0

    @pytest.mark.parametrize("d,k", [(3, 1), (2, 2)])
    def test_against_sympy_derivatives(self, d, k):
        kern = build_wendland(d, k)
        r = sympy.Symbol("r")
        expr = sympy_poly(kern.poly, r)
        for order in range(2 * k + 2):
            jump = abs(sympy.diff(expr, r, order).subs(r, 1))
            assert smoothness_defect(kern, order) == Fraction(int(sympy.numer(jump)), int(sympy.denom(jump)))

    def test_scaled_kernel(self):
        # jump of the order-2 derivative scales with 1/scale^2
        kern = build_wendland(3, 0, scale=2.0)
        assert smoothness_defect(kern, 2) == F(2) / F(4)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            smoothness_defect(build_wendland(3, 1), -1)
