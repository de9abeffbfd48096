"""Grassmannian layer: basis vectors, recursion/lowering operators, flow series."""

import pytest

from gwtau._rat import Q
from gwtau.grassmann import (absolute_ring, apply_a, apply_b,
                             apply_exp_flow_operator, apply_quantum_curve,
                             b_shift_expansion, flow_resubstitution_defect,
                             flow_series, phi_absolute, phi_relative,
                             relative_ring, rising_factorial_coeffs,
                             string_residual_phi, w_inverse_transform)
from gwtau.series import (ParamPoly, Ring, TruncatedSeries, agree_on_window,
                          is_zero_to)
from gwtau.specialfn import stirling_exp

M = 12
QCAP = 3
WCAP = 3


class TestFlowSeries:
    DISPLAYED = (Q(-1, 2), Q(-1, 12), Q(-1, 48), Q(-1, 180), Q(-11, 8640),
                 Q(-1, 6720), Q(11, 241920), Q(29, 1451520),
                 Q(-493, 43545600), Q(-2711, 239500800))

    def test_displayed_coefficients(self):
        assert flow_series(11) == self.DISPLAYED

    def test_resubstitution(self):
        g = flow_series(14)
        assert all(d == 0 for d in flow_resubstitution_defect(g, 14))

    def test_exp_minus_y_rational_images(self):
        for k in range(1, 7):
            mono = [Q(0)] * k + [Q(1)]
            assert apply_exp_flow_operator(mono, -1) == \
                rising_factorial_coeffs(k)

    def test_exp_y_inverts(self):
        p = [Q(2), Q(-1), Q(0), Q(3)]
        there = apply_exp_flow_operator(p, -1)
        back = apply_exp_flow_operator(there, +1)
        assert back == p


class TestWInverse:
    def test_monomial_rule_constant(self):
        img = w_inverse_transform({0: 1}, 8)
        assert agree_on_window(img, stirling_exp(Q(0), 8))

    def test_functional_equation_image_of_z(self):
        # image of z equals (z + 1/2) * image of 1
        ring = Ring(())
        img = w_inverse_transform({1: 1}, 10)
        half = TruncatedSeries("z", ring, {1: ParamPoly.const(ring, 1),
                                           0: ParamPoly.const(ring, Q(1, 2))})
        assert agree_on_window(img, half * stirling_exp(Q(0), 10), min_depth=8)

    def test_linearity(self):
        a = w_inverse_transform({1: 1}, 8)
        b = w_inverse_transform({0: 1}, 8)
        assert agree_on_window(w_inverse_transform({1: 1, 0: 1}, 8), a + b,
                               min_depth=6)


class TestBasisVectors:
    def test_phi1_qzero_leading(self):
        bv = phi_absolute(1, 6, 0, charge=0)
        assert bv.series.coefficient(0) == ParamPoly.const(bv.series.ring, 1)
        assert bv.series.coefficient(-1) == \
            ParamPoly.const(bv.series.ring, Q(-1, 24))

    def test_normalization_every_k(self):
        for k in range(1, 6):
            bv = phi_absolute(k, 6, 2)
            lead = bv.series.coefficient(k - 1)
            assert lead == ParamPoly.const(bv.series.ring, 1)

    def test_phi1_zinv_coefficient(self):
        # z^-1 coefficient at n=0: qt - 1/24, from the l=0 and l=1 terms
        bv = phi_absolute(1, 6, 2, charge=0)
        ring = bv.series.ring
        qt = ParamPoly.var(ring, "qt")
        assert bv.series.coefficient(-1) == qt - Q(1, 24)

    def test_relative_zero_deformation_is_qzero_absolute(self):
        bv = phi_relative(2, 8, 2)
        zeroed = bv.series.map_coeffs(
            lambda p: p.subs({"s1": 0, "s2": 0}))
        plain = phi_absolute(2, 8, 0).series
        assert agree_on_window(
            zeroed.with_ring(absolute_ring(0), {"s1": "qt", "s2": "qt"}),
            plain, min_depth=6)

    def test_relative_collapses_to_absolute(self):
        rel = phi_relative(2, 10, 4).series
        ab = phi_absolute(2, 10, 4).series
        mapped = rel.map_coeffs(
            lambda p: p.subs({f"s{m}": 0 for m in range(2, 5)}))
        mapped = mapped.with_ring(ab.ring,
                                  {f"s{m}": "qt" for m in range(1, 5)})
        assert agree_on_window(mapped, ab, min_depth=8)

    def test_single_part_weight_two(self):
        bv = phi_relative(1, 8, 2)
        ring = bv.series.ring
        n = ParamPoly.var(ring, "n")
        s1 = ParamPoly.var(ring, "s1")
        s2 = ParamPoly.var(ring, "s2")
        manual = stirling_exp(n, 8, ring) \
            + stirling_exp(n + 1, 8, ring).shift_exponent(-1).scale(s1) \
            + stirling_exp(n + 2, 8, ring).shift_exponent(-2).scale(s2) \
            + stirling_exp(n + 2, 8, ring).shift_exponent(-2).scale(
                s1 * s1 * Q(1, 2))
        assert agree_on_window(bv.series, manual, min_depth=6)


class TestKacSchwarz:
    def test_b_expansion_anchor(self):
        ring = absolute_ring(1)
        exp_b = b_shift_expansion(ring, None, -4)
        n = ParamPoly.var(ring, "n")
        assert exp_b.coefficient(1) == ParamPoly.const(ring, 1)
        assert exp_b.coefficient(0) == ParamPoly.const(ring, Q(1, 2)) - n
        assert exp_b.coefficient(-1) == n * n * Q(1, 2) - Q(1, 24)

    def test_recursion(self):
        for k in range(1, 5):
            bv = phi_absolute(k, M, QCAP)
            nxt = phi_absolute(k + 1, M, QCAP)
            assert agree_on_window(apply_b(bv.series, None), nxt.series,
                                   min_depth=8)

    def test_b_inverse_roundtrip(self):
        bv = phi_absolute(3, M, QCAP)
        back = apply_b(apply_b(bv.series, None, "forward"), None, "inverse")
        assert agree_on_window(back, bv.series, min_depth=8)

    def test_annihilates_first(self):
        img = apply_a(phi_absolute(1, M, QCAP).series, None)
        assert is_zero_to(img, -M + 3)

    def test_lowering(self):
        for k in (2, 3, 4):
            img = apply_a(phi_absolute(k, M, QCAP).series, None)
            prev = phi_absolute(k - 1, M, QCAP).series
            assert agree_on_window(img, prev.scale(Q(k - 1)), min_depth=6)

    def test_a_on_monomial(self):
        # a z^k = k z^{k-1} (1 + O(1/z))
        ring = absolute_ring(1)
        for k in (1, 2, 3):
            zk = TruncatedSeries.monomial("z", ring, k)
            img = apply_a(zk, None, to_order=-6)
            assert img.coefficient(k - 1) == ParamPoly.const(ring, k)

    def test_commutator(self):
        ring = absolute_ring(QCAP)
        f = TruncatedSeries("z", ring, {2: ParamPoly.const(ring, Q(3, 7)),
                                        0: ParamPoly.var(ring, "n"),
                                        -1: ParamPoly.const(ring, 1),
                                        -3: ParamPoly.var(ring, "qt")}, -9)
        resid = apply_a(apply_b(f, None), None) \
            - apply_b(apply_a(f, None), None) - f
        assert is_zero_to(resid, -5)

    def test_quantum_curve(self):
        for k in (1, 2, 3):
            bv = phi_absolute(k, M, QCAP)
            resid = apply_quantum_curve(bv.series, None) \
                - bv.series.scale(Q(k))
            assert is_zero_to(resid, k - M + 2)

    def test_string_equation(self):
        for k in (1, 2, 3):
            resid = string_residual_phi(phi_absolute(k, M, QCAP))
            assert is_zero_to(resid, k - M)

    def test_relative_suite(self):
        for k in (1, 2):
            bv = phi_relative(k, M, WCAP)
            nxt = phi_relative(k + 1, M, WCAP)
            assert agree_on_window(apply_b(bv.series, None), nxt.series,
                                   min_depth=8)
            img = apply_a(bv.series, None, deformation=WCAP)
            if k == 1:
                assert is_zero_to(img, -M + WCAP + 2)
            else:
                prev = phi_relative(k - 1, M, WCAP).series
                assert agree_on_window(img, prev.scale(Q(k - 1)), min_depth=5)
            qsc = apply_quantum_curve(bv.series, None, deformation=WCAP)
            assert is_zero_to(qsc - bv.series.scale(Q(k)), k - M + WCAP + 2)

    def test_truncation_soundness_higher_cap(self):
        low = apply_b(phi_absolute(2, 8, 2).series, None)
        high = apply_b(phi_absolute(2, 14, 2).series, None)
        lo, hi = low.known_window()
        for e in range(lo, hi + 1):
            assert low.coefficient(e) == high.coefficient(e)
