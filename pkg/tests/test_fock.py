"""Fock oracle: partitions, operator algebra, tau evaluators, hierarchy checks."""

import pytest
import sympy

from gwtau._rat import Q
from gwtau.fock import (FockSpace, brute_force_tau_relative,
                        brute_force_tau_stationary, brute_force_vev,
                        conjugate_partition, hirota_residual, hook_dim_ratio,
                        p_eigenvalue, partitions_up_to, relative_ring,
                        scaling_constraint_residual, schur_from_power_sums,
                        stationary_ring, tau_relative, tau_stationary,
                        toda_first_equation_residual)
from gwtau.series import ParamPoly, Ring, poly_exp_nilpotent
from gwtau.specialfn import charge_moment


class TestPartitions:
    def test_counts(self):
        assert partitions_up_to(0) == ((),)
        assert len(partitions_up_to(3)) == 7
        assert len(partitions_up_to(5)) == 19

    def test_against_sympy(self):
        from sympy.utilities.iterables import partitions as sym_partitions
        for w in range(1, 9):
            ours = {p for p in partitions_up_to(w) if sum(p) == w}
            theirs = set()
            for d in sym_partitions(w):
                lam = []
                for part, mult in sorted(d.items(), reverse=True):
                    lam.extend([part] * mult)
                theirs.add(tuple(lam))
            assert ours == theirs

    def test_hook_dims(self):
        # dim of standard representations: dim (2,1) = 2, dim (2,2) = 2
        assert hook_dim_ratio((2, 1)) == Q(2, 6)
        assert hook_dim_ratio((2, 2)) == Q(2, 24)
        assert hook_dim_ratio(()) == 1


class TestEigenvalues:
    def test_vacuum(self):
        nring = Ring(("n",))
        n = ParamPoly.var(nring, "n")
        for k in (1, 2, 3):
            assert p_eigenvalue(k, (), n) == charge_moment(k, n)

    def test_k1_counts_size(self):
        nring = Ring(("n",))
        n = ParamPoly.var(nring, "n")
        for lam in partitions_up_to(4):
            want = charge_moment(1, n) + Q(sum(lam))
            assert p_eigenvalue(1, lam, n) == want

    def test_k2_single_box(self):
        assert p_eigenvalue(2, (1,), Q(0)) == 0

    def test_matches_occupation_sums(self):
        for charge in (-2, 0, 2):
            space = FockSpace(charge, 5)
            for k in (1, 2, 3):
                diag = space.p_diagonal(k)
                for lam in space.basis:
                    assert diag[space.index[lam]] == \
                        p_eigenvalue(k, lam, Q(charge))


class TestFockSpace:
    def test_heisenberg(self):
        space = FockSpace(0, 8)
        for (k, l) in [(1, -1), (2, -2), (3, -3), (1, -2), (1, 2), (-1, -2)]:
            for lam in [(), (1,), (2, 1)]:
                if sum(lam) + abs(k) + abs(l) > 7:
                    continue
                v = {space.index[lam]: Q(1)}
                ab = space.apply_j(k, space.apply_j(l, v))
                ba = space.apply_j(l, space.apply_j(k, v))
                com = dict(ab)
                for i, c in ba.items():
                    com[i] = com.get(i, Q(0)) - c
                com = {i: c for i, c in com.items() if c}
                want = {space.index[lam]: Q(k)} if k + l == 0 else {}
                assert com == want

    def test_vev_examples(self):
        assert brute_force_vev([("J", 1), ("J", -1)], 0, 6) == 1
        for n in (-2, -1, 0, 1, 2):
            assert brute_force_vev([("P", 1)], n, 6) == charge_moment(1, n)

    def test_left_matrix_elements_are_hooks(self):
        space = FockSpace(0, 5)
        left = space.left_exp_j1()
        for lam in space.basis:
            got = left.get(space.index[lam], Q(0))
            assert abs(got) == hook_dim_ratio(lam)


class TestSchur:
    def test_single_row(self):
        ring = Ring(("p1", "p2"))
        p1 = ParamPoly.var(ring, "p1")
        p2 = ParamPoly.var(ring, "p2")
        assert schur_from_power_sums((1,), [p1, p2]) == p1
        assert schur_from_power_sums((2,), [p1, p2]) == (p1 * p1 + p2) / 2
        assert schur_from_power_sums((1, 1), [p1, p2]) == (p1 * p1 - p2) / 2

    def test_against_sympy_random(self):
        # evaluate both at integer power sums
        vals = [Q(2), Q(-3), Q(5), Q(1)]
        x, y = sympy.symbols("x y")
        # power sums of variables (x, y) with x=2 solving is awkward; instead
        # compare via the classical 2-variable specialization p_k = x^k + y^k
        xv, yv = Q(2), Q(-1, 3)
        ps = [xv ** k + yv ** k for k in range(1, 5)]
        for lam in partitions_up_to(4):
            if len(lam) > 2:
                continue  # vanishes for more rows than variables
            ours = schur_from_power_sums(lam, ps)
            theirs = _schur_two_vars(lam, xv, yv)
            assert ours == theirs, lam

    def test_more_rows_than_variables_vanishes(self):
        xv = Q(3, 2)
        ps = [xv ** k for k in range(1, 5)]
        assert schur_from_power_sums((1, 1), ps) == 0
        assert schur_from_power_sums((2, 1, 1), ps) == 0


def _schur_two_vars(lam, x, y):
    # bialternant: s_lam(x, y) = det[x^(lam_j + 2 - j)] / (x - y)
    lam = tuple(lam) + (0,) * (2 - len(lam))
    num = (x ** (lam[0] + 1) * y ** lam[1] - y ** (lam[0] + 1) * x ** lam[1])
    return num / (x - y)


class TestTauStationary:
    def test_qzero_closed_form(self):
        tau = tau_stationary(4, 2)
        ring = tau.ring
        n = ParamPoly.var(ring, "n")
        expo = ParamPoly(ring)
        for k in range(1, 5):
            expo = expo + ParamPoly.var(ring, f"t{k}") * charge_moment(k, n)
        closed = poly_exp_nilpotent(expo)
        slice0 = ParamPoly(ring, {e: v for e, v in tau.poly.terms.items()
                                  if e[ring.index("qt")] == 0})
        assert slice0 == closed

    def test_t1_coefficient(self):
        tau = tau_stationary(3, 2)
        ring = tau.ring
        n = ParamPoly.var(ring, "n")
        assert tau.coefficient_of_times({1: 1}) == \
            charge_moment(1, n) + ParamPoly.var(ring, "qt")

    def test_normalization(self):
        tau = tau_stationary(3, 3)
        assert tau.at_zero_times() == ParamPoly.const(tau.ring, 1)

    def test_brute_force_agreement_small(self):
        ring = stationary_ring(3, 2)
        fast = tau_stationary(3, 2)
        for c in (-2, -1, 0, 1, 2):
            brute = brute_force_tau_stationary(3, 2, c, ring=ring,
                                               recheck=(c == 0))
            assert fast.poly.subs({"n": Q(c)}) == brute.poly


class TestTauRelative:
    def test_normalization_all_s(self):
        tau = tau_relative(2, 4)
        assert tau.at_zero_times() == ParamPoly.const(tau.ring, 1)

    def test_first_time_derivative(self):
        tau = tau_relative(2, 4)
        ring = tau.ring
        n = ParamPoly.var(ring, "n")
        assert tau.coefficient_of_times({1: 1}) == \
            charge_moment(1, n) + ParamPoly.var(ring, "s1")

    def test_brute_force_agreement_small(self):
        ring = relative_ring(2, 3)
        fast = tau_relative(2, 3)
        for c in (-1, 0, 1):
            brute = brute_force_tau_relative(2, 3, c, ring=ring,
                                             recheck=(c == 0))
            assert fast.poly.subs({"n": Q(c)}) == brute.poly

    def test_specializes_to_stationary(self):
        # s_k = qt delta_{k,1} turns the relative sum into the stationary one
        rel = tau_relative(3, 3)
        sta = tau_stationary(3, 3)
        ring = sta.ring
        zeroed = rel.poly.subs({"s2": 0, "s3": 0})
        mapped = zeroed.embed(ring, {"s1": "qt", "s2": "qt", "s3": "qt"})
        assert mapped == sta.poly


class TestHierarchy:
    def test_toda_first_equation(self):
        assert toda_first_equation_residual(4).is_zero()

    def test_hirota_small(self):
        for gap in (0, 1, 2):
            assert hirota_residual(gap, 2, 2).is_zero()

    def test_scaling_constraint_at_zero_times(self):
        resid = scaling_constraint_residual(2, 3)
        ring = resid.ring
        t_idx = [ring.index(nm) for nm in ring.names if nm.startswith("t")]
        at0 = {e: v for e, v in resid.terms.items()
               if all(e[i] == 0 for i in t_idx)}
        assert not at0

    def test_scaling_constraint_fails_beyond_zero_times(self):
        # recorded empirical finding: no time-independent constant extends
        # the zero-time constraint to higher time orders
        assert not scaling_constraint_residual(2, 3).is_zero()


class TestCutoffPolicy:
    def test_insufficient_cutoff_detected(self):
        ok = brute_force_tau_stationary(2, 2, 0, cutoff=6, recheck=True)
        assert ok.at_zero_times() == ParamPoly.const(ok.ring, 1)
        # a cutoff below the q-cap loses states; the doubling re-check trips
        from gwtau.series import ContractViolation
        with pytest.raises(ContractViolation):
            brute_force_tau_stationary(4, 4, 0, cutoff=2, recheck=True)
