import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semijulia.errors import CompositionTooLarge, NoRepellingFixedPoint
from semijulia.polycore import (GeneratorPair, Polynomial, Word, compose, critical_values, derivative,
                                evaluate, evaluate_flagged, format_polynomial, parse_complex,
                                parse_polynomial, preimages, preimages_many, repelling_fixed_point,
                                spherical_norm, word_map)

from conftest import poly

coef = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)
lead = coef.filter(lambda c: abs(c) > 0.2)
polys = st.builds(lambda cs, a: Polynomial(tuple(cs) + (a,)), st.lists(coef, min_size=2, max_size=4), lead)


class TestEvaluate:
    def test_examples(self):
        assert evaluate(poly(1, 0, 1), 2) == 5
        assert evaluate(poly(0, 0, 0, 2), 1) == 2
        assert evaluate(poly(-1, 0, 1), 0) == -1

    def test_saturates_instead_of_overflow(self):
        v, flag = evaluate_flagged(poly(0, 0, 1), 1e200)
        assert flag and abs(v) == pytest.approx(1e300)

    def test_degree_below_two_rejected(self):
        with pytest.raises(ValueError):
            Polynomial((1, 2))
        with pytest.raises(ValueError):
            Polynomial((1, 2, 0))

    def test_vectorized_call(self):
        p = poly(-1, 0, 1)
        z = np.array([0, 1, 2j])
        np.testing.assert_allclose(p(z), z ** 2 - 1)


class TestCompose:
    def test_examples(self):
        assert compose(poly(0, 0, 1), poly(-1, 0, 1)).coeffs == (1, 0, -2, 0, 1)
        assert compose(poly(0, 0, 0, 2), poly(0, 0, 1)) == Polynomial.monomial(2, 6)
        assert compose(poly(0, 0, 1), poly(0, 0, 0, 2)) == Polynomial.monomial(4, 6)

    def test_degree_cap(self):
        with pytest.raises(CompositionTooLarge):
            compose(Polynomial.monomial(1, 70), Polynomial.monomial(1, 70))

    @settings(max_examples=40, deadline=None)
    @given(polys, polys, coef)
    def test_composition_evaluates_pointwise(self, p, q, z):
        lhs = compose(p, q)(z)
        rhs = p(q(z))
        assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(rhs))


class TestDerivative:
    def test_examples(self):
        np.testing.assert_array_equal(derivative(poly(0, 0, 0, 2)), [0, 0, 6])
        np.testing.assert_array_equal(derivative(poly(-1, 0, 1)), [0, 2])
        np.testing.assert_array_equal(derivative(Polynomial.monomial(1, 4)), [0, 0, 0, 4])


class TestPreimages:
    def test_square_roots(self):
        assert sorted(preimages(poly(0, 0, 1), 4), key=lambda z: z.real) == pytest.approx([-2, 2])

    def test_cube_roots(self):
        got = preimages(poly(0, 0, 0, 2), 2)
        want = [cmath.exp(2j * math.pi * k / 3) for k in range(3)]
        for w in want:
            assert min(abs(g - w) for g in got) < 1e-10

    def test_double_root(self):
        got = preimages(poly(-1, 0, 1), -1)
        assert len(got) == 2 and max(abs(g) for g in got) < 1e-6

    @settings(max_examples=40, deadline=None)
    @given(polys, coef)
    def test_preimages_map_back(self, p, w):
        roots = preimages_many(p, [w])[0]
        assert roots.size == p.degree
        assert np.max(np.abs(p(roots) - w)) <= 1e-6 * max(1.0, abs(w), max(abs(c) for c in p.coeffs))


class TestCriticalValues:
    def test_examples(self):
        assert critical_values(poly(-1, 0, 1)) == pytest.approx([-1])
        assert critical_values(poly(0, 0, 0, 2)) == pytest.approx([0])
        assert sorted(critical_values(poly(0, -3, 0, 1)), key=lambda z: z.real) == pytest.approx([-2, 2])


class TestSphericalNorm:
    def test_examples(self):
        p = poly(0, 0, 1)
        assert spherical_norm(p, 1) == pytest.approx(2.0)
        assert spherical_norm(p, 0) == 0
        assert spherical_norm(p, 10) == pytest.approx(20 * 101 / 10001)

    @settings(max_examples=40, deadline=None)
    @given(coef.filter(lambda z: abs(z) > 1e-3))
    def test_invariant_under_inversion_for_monomial(self, z):
        # z^2 commutes with 1/z, an isometry of the chordal metric
        p = poly(0, 0, 1)
        assert spherical_norm(p, z) == pytest.approx(spherical_norm(p, 1 / z), rel=1e-9)


class TestRepellingFixedPoint:
    def test_examples(self):
        assert repelling_fixed_point(poly(0, 0, 1)) == pytest.approx(1)
        z = repelling_fixed_point(poly(0, 0, 0, 2))
        assert abs(z) == pytest.approx(2 ** -0.5)
        assert abs(6 * z * z) == pytest.approx(3)
        assert repelling_fixed_point(poly(-1, 0, 1)) == pytest.approx((1 + math.sqrt(5)) / 2)
        assert abs(2 * repelling_fixed_point(poly(-1, 0, 1))) > 1

    def test_is_fixed_and_repelling(self):
        p = poly(0.3 + 0.1j, 0.2, 1)
        z = repelling_fixed_point(p)
        assert abs(p(z) - z) < 1e-10 and abs(p.deriv(z)) > 1


class TestWords:
    def test_order_of_application(self):
        pair = GeneratorPair(poly(1, 0, 1), poly(0, 0, 2))
        h12 = word_map(pair, Word((1, 2)))   # h2 after h1
        assert h12(1.0) == pytest.approx(pair.h2(pair.h1(1.0)))

    def test_bad_symbol(self):
        with pytest.raises(ValueError):
            Word((1, 3))

    def test_empty_word(self):
        with pytest.raises(ValueError):
            word_map(GeneratorPair(poly(0, 0, 1), poly(0, 0, 2)), Word(()))


class TestParsing:
    def test_literals(self):
        assert parse_complex("-1+0i") == -1
        assert parse_complex("−1+0i") == -1
        assert parse_complex("-i") == -1j
        assert parse_complex("1e-3-2i") == complex(1e-3, -2)
        assert parse_complex("2.5") == 2.5

    def test_polynomial(self):
        assert parse_polynomial("−1+0i 0+0i 1+0i") == poly(-1, 0, 1)

    @settings(max_examples=50, deadline=None)
    @given(polys)
    def test_format_roundtrip(self, p):
        assert parse_polynomial(format_polynomial(p)) == p


class TestPair:
    def test_metadata(self):
        pair = GeneratorPair(poly(0, 0, 0, 1), poly(0, 0, 0, 2))
        assert pair.degrees == (3, 3)
        assert pair.leadings == (1, 2)
        assert pair[2] == poly(0, 0, 0, 2)
        assert not pair.duplicated
        with pytest.raises(IndexError):
            pair[3]

    def test_no_repelling_point_error_type(self):
        assert issubclass(NoRepellingFixedPoint, Exception)


class TestRepellingCycle:
    def test_parabolic_falls_back_to_period_two(self):
        from semijulia.polycore import compose, repelling_periodic_point
        p = poly(0.25, 0, 1)
        with pytest.raises(NoRepellingFixedPoint):
            repelling_fixed_point(p)
        z = repelling_periodic_point(p)
        q = compose(p, p)
        assert abs(q(z) - z) < 1e-9 and abs(q.deriv(z)) > 1
