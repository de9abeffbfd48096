"""Substrate tests: exact polynomials, truncated Laurent arithmetic, serialization."""

import json
import random

import pytest

from gwtau._rat import Q
from gwtau.series import (AlphabetMismatch, ContractViolation, ParamPoly,
                          Ring, TruncatedSeries, UnknownCoefficient,
                          agree_on_window, exp_series, geometric_inverse,
                          log1p_series, poly_from_obj, poly_to_obj,
                          series_from_obj, series_to_obj, shift_argument,
                          to_canonical_json, weighted_rule)

Z = "z"
PLAIN = Ring(())


def series(coeffs, order=None, ring=PLAIN):
    return TruncatedSeries(Z, ring, {e: ParamPoly.const(ring, c)
                                     for e, c in coeffs.items()}, order)


def rand_series(rng, ring=PLAIN, lo=-4, hi=3):
    coeffs = {e: Q(rng.randint(-5, 5), rng.randint(1, 4))
              for e in range(lo, hi + 1) if rng.random() < 0.7}
    return series(coeffs, order=lo, ring=ring)


class TestParamPoly:
    def test_caps_drop_monomials(self):
        ring = Ring(("q",), [weighted_rule(("q",), {"q": 1}, 2)])
        q = ParamPoly.var(ring, "q")
        assert (q * q * q).is_zero()
        assert (q * q).coefficient((2,)) == Q(1)

    def test_weighted_cap(self):
        names = ("s1", "s2")
        ring = Ring(names, [weighted_rule(names, {"s1": 1, "s2": 2}, 3)])
        s1 = ParamPoly.var(ring, "s1")
        s2 = ParamPoly.var(ring, "s2")
        assert not (s1 * s2).is_zero()       # weight 3
        assert (s1 * s1 * s2).is_zero()      # weight 4
        assert (s2 * s2).is_zero()           # weight 4

    def test_alphabet_mixing_rejected(self):
        a = ParamPoly.var(Ring(("x",)), "x")
        b = ParamPoly.var(Ring(("y",)), "y")
        with pytest.raises(AlphabetMismatch):
            a * b

    def test_shift_var(self):
        ring = Ring(("n",))
        n = ParamPoly.var(ring, "n")
        p = n * n - ParamPoly.const(ring, Q(1, 24))
        shifted = p.shift_var("n", 2)
        # (n+2)^2 - 1/24
        assert shifted.coefficient((0,)) == Q(4) - Q(1, 24)
        assert shifted.coefficient((1,)) == Q(4)
        assert shifted.coefficient((2,)) == Q(1)

    def test_diff_subs(self):
        ring = Ring(("n", "q"))
        n = ParamPoly.var(ring, "n")
        q = ParamPoly.var(ring, "q")
        p = n ** 3 * q + 2 * q
        assert p.diff("n") == 3 * n ** 2 * q
        assert p.subs({"n": Q(2)}) == 10 * q


class TestMul:
    def test_difference_of_squares(self):
        one_plus = series({0: 1, -1: 1})
        one_minus = series({0: 1, -1: -1})
        prod = one_plus * one_minus
        assert prod == series({0: 1, -2: -1})

    def test_annihilator(self):
        f = series({2: 3, -1: Q(1, 2)}, order=-5)
        zero = TruncatedSeries.zero(Z, PLAIN)
        assert (f * zero).is_zero()

    def test_z_plus_one_times_inverse(self):
        zp1 = series({1: 1, 0: 1})
        zinv = series({-1: 1})
        assert zp1 * zinv == series({0: 1, -1: 1})

    def test_order_bookkeeping(self):
        # (1 + O(z^-3)) * (z + O(z^-1)): the unknown tail of the second
        # factor times the first factor's top contaminates z^-1 and below.
        f = series({0: 1}, order=-2)
        g = series({1: 1}, order=0)
        prod = f * g
        assert prod.order == 0
        assert prod.coefficient(1) == ParamPoly.const(PLAIN, 1)
        assert prod.coefficient(0).is_zero()
        with pytest.raises(UnknownCoefficient):
            prod.coefficient(-1)

    def test_ring_axioms_random(self):
        rng = random.Random(7)
        for _ in range(25):
            a, b, c = (rand_series(rng) for _ in range(3))
            lhs = (a * b) * c
            rhs = a * (b * c)
            assert agree_on_window(lhs, rhs)
            assert agree_on_window(a * (b + c), a * b + a * c)
            assert agree_on_window(a * b, b * a)


class TestExp:
    def test_exp_zinv(self):
        f = series({-1: 1}, order=-3)
        e = exp_series(f)
        assert e.coefficient(0) == ParamPoly.const(PLAIN, 1)
        assert e.coefficient(-1) == ParamPoly.const(PLAIN, 1)
        assert e.coefficient(-2) == ParamPoly.const(PLAIN, Q(1, 2))
        assert e.coefficient(-3) == ParamPoly.const(PLAIN, Q(1, 6))

    def test_exp_zero(self):
        assert exp_series(TruncatedSeries.zero(Z, PLAIN)) == \
            TruncatedSeries.one(Z, PLAIN)

    def test_exp_vacuum_weight(self):
        f = series({-1: Q(-1, 24)}, order=-1)
        e = exp_series(f)
        assert e.coefficient(-1) == ParamPoly.const(PLAIN, Q(-1, 24))
        assert e.coefficient(0) == ParamPoly.const(PLAIN, 1)

    def test_exp_rejects_constant(self):
        with pytest.raises(ContractViolation):
            exp_series(series({0: 1, -1: 1}, order=-2))

    def test_exp_additive(self):
        rng = random.Random(11)
        for _ in range(10):
            a = rand_series(rng, lo=-5, hi=-1)
            b = rand_series(rng, lo=-5, hi=-1)
            assert agree_on_window(exp_series(a + b),
                                   exp_series(a) * exp_series(b))

    def test_exp_log_roundtrip(self):
        rng = random.Random(13)
        for _ in range(10):
            a = rand_series(rng, lo=-5, hi=-1)
            assert agree_on_window(log1p_series(exp_series(a) - 1), a)


class TestShift:
    def test_zinv_shift(self):
        f = series({-1: 1}, order=-4)
        g = shift_argument(f, 1)
        # 1/(z+1) = z^-1 - z^-2 + z^-3 - ...
        assert g.coefficient(-1) == ParamPoly.const(PLAIN, 1)
        assert g.coefficient(-2) == ParamPoly.const(PLAIN, -1)
        assert g.coefficient(-3) == ParamPoly.const(PLAIN, 1)

    def test_square_shift(self):
        f = series({2: 1})
        g = shift_argument(f, 1)
        assert g == series({2: 1, 1: 2, 0: 1})
        assert g.order is None  # polynomial input stays exact

    def test_constant_unchanged(self):
        f = series({0: Q(5, 3)})
        assert shift_argument(f, Q(7, 2)) == f

    def test_round_trip(self):
        rng = random.Random(3)
        for _ in range(10):
            f = rand_series(rng, lo=-6, hi=2)
            c = Q(rng.randint(-3, 3), rng.randint(1, 3))
            back = shift_argument(shift_argument(f, c), -c)
            assert agree_on_window(back, f)

    def test_geometric_inverse(self):
        inv = geometric_inverse(Z, PLAIN, 1, -1, -4)  # 1/(z-1)
        direct = series({1: 1, 0: -1})
        prod = direct * inv
        assert agree_on_window(prod, TruncatedSeries.one(Z, PLAIN))


class TestCoefficientAccess:
    def test_stored_and_implicit_zero(self):
        f = series({0: 1, -2: -1}, order=-2)
        assert f.coefficient(-2) == ParamPoly.const(PLAIN, -1)
        assert f.coefficient(-1).is_zero()
        assert f.coefficient(5).is_zero()

    def test_below_order_raises(self):
        f = series({0: 1, -2: -1}, order=-2)
        with pytest.raises(UnknownCoefficient):
            f.coefficient(-3)


class TestTruncationSoundness:
    def test_pipeline_two_caps_agree(self):
        def pipeline(depth):
            f = series({e: Q(1, 1 + abs(e)) for e in range(-depth, 2)},
                       order=-depth)
            g = exp_series(series({-1: Q(1, 3), -2: 1}, order=-depth))
            return shift_argument(f * g, 1)

        low = pipeline(6)
        high = pipeline(12)
        lo, hi = low.known_window()
        for e in range(lo, hi + 1):
            assert low.coefficient(e) == high.coefficient(e)


class TestSerialization:
    def test_round_trip_poly(self):
        ring = Ring(("n", "q"), [weighted_rule(("n", "q"), {"q": 1}, 4)])
        p = (ParamPoly.var(ring, "n") + 3) ** 3 * ParamPoly.var(ring, "q") \
            - ParamPoly.const(ring, Q(5, 7))
        obj = poly_to_obj(p)
        text = to_canonical_json(obj)
        again = poly_from_obj(json.loads(text))
        assert again == p
        assert to_canonical_json(poly_to_obj(again)) == text

    def test_round_trip_series(self):
        ring = Ring(("n",))
        n = ParamPoly.var(ring, "n")
        f = TruncatedSeries(Z, ring, {2: n * n, -3: n - Q(1, 2)}, -5)
        obj = series_to_obj(f)
        text = to_canonical_json(obj)
        again = series_from_obj(json.loads(text))
        assert again == f
        assert to_canonical_json(series_to_obj(again)) == text
