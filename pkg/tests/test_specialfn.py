"""Special-function layer: Bernoulli polynomials, vacuum moments, Stirling tails."""

import random

import sympy

from gwtau._rat import Q
from gwtau.series import ParamPoly, Ring, TruncatedSeries, agree_on_window
from gwtau.specialfn import (bernoulli_poly, bernoulli_poly_at, charge_moment,
                             gamma_ratio_series, stirling_exp, stirling_series)

NRING = Ring(("n",))


def n_poly():
    return ParamPoly.var(NRING, "n")


def test_bernoulli_small():
    assert bernoulli_poly(0) == (Q(1),)
    assert bernoulli_poly(1) == (Q(-1, 2), Q(1))
    assert bernoulli_poly(2) == (Q(1, 6), Q(-1), Q(1))


def test_bernoulli_vs_sympy():
    x = sympy.Symbol("x")
    for k in range(0, 14):
        ours = bernoulli_poly(k)
        theirs = sympy.Poly(sympy.bernoulli(k, x), x).all_coeffs()[::-1]
        assert [Q(str(c)) for c in theirs] == list(ours)


def test_bernoulli_resubstitution():
    # sum_k B_k(n) z^k / k! * (e^z - 1) == z * e^{n z}, order by order
    M = 10
    x = sympy.Symbol("x")
    z = sympy.Symbol("z")
    lhs = sum(
        sympy.Rational(*divmod(0, 1)[:0]) if False else
        sympy.Poly(list(reversed(
            [sympy.Rational(str(c)) for c in bernoulli_poly(k)])), x).as_expr()
        * z ** k / sympy.factorial(k)
        for k in range(M + 1))
    lhs = sympy.expand(lhs * (sympy.exp(z) - 1))
    rhs = z * sympy.exp(x * z)
    diff = sympy.series(lhs - rhs, z, 0, M + 1).removeO()
    assert sympy.expand(diff) == 0


def test_charge_moment_values():
    n = n_poly()
    c1 = charge_moment(1, n)
    # n^2/2 - 1/24
    assert c1.coefficient((2,)) == Q(1, 2)
    assert c1.coefficient((0,)) == Q(-1, 24)
    assert charge_moment(1, 0) == Q(-1, 24)
    assert charge_moment(2, 0) == 0  # B_3(1/2) = 0


def test_charge_moment_symmetry():
    # B_{k+1}(n+1/2) = (-1)^{k+1} B_{k+1}(1/2-n), so
    # charge_moment(k, n) == (-1)^{k+1} * charge_moment(k, -n), as polynomials.
    n = n_poly()
    for k in range(1, 9):
        lhs = charge_moment(k, n)
        rhs = bernoulli_poly_at(k + 1, ParamPoly.const(NRING, Q(1, 2)) - n) \
            / Q(k + 1) * Q((-1) ** (k + 1))
        assert lhs == rhs


def test_stirling_series_coefficients():
    n = n_poly()
    st = stirling_series(n, 6)
    c = st.series.coefficient(-1)
    assert c.degree("n") == 2
    assert c.coefficient((2,)) == Q(1, 2)
    assert c.coefficient((0,)) == Q(-1, 24)


def test_stirling_exp_charge_zero():
    e = stirling_exp(Q(0), 4)
    assert e.coefficient(0) == ParamPoly.const(Ring(()), 1)
    assert e.coefficient(-1) == ParamPoly.const(Ring(()), Q(-1, 24))


def test_gamma_ratio_reference_cases():
    # a = 1/2 gives exp(F_0); a = -1/2 gives z^-1 exp(F_1)
    r0 = gamma_ratio_series(Q(1, 2), 6)
    assert agree_on_window(r0, stirling_exp(Q(0), 6))
    r1 = gamma_ratio_series(Q(-1, 2), 6)
    assert agree_on_window(r1, stirling_exp(Q(1), 6).shift_exponent(-1))


def test_gamma_ratio_functional_equation():
    # Gamma(z+a+1) = (z+a) Gamma(z+a):
    # ratio(a+1) == (z + a) * ratio(a) on the common window.
    rng = random.Random(5)
    ring = Ring(())
    for _ in range(10):
        j = rng.randint(-5, 5)
        a = Q(1, 2) + j
        lhs = gamma_ratio_series(a + 1, 12)
        za = TruncatedSeries(Z := "z", ring, {1: ParamPoly.const(ring, 1),
                                              0: ParamPoly.const(ring, a)})
        rhs = za * gamma_ratio_series(a, 12)
        assert agree_on_window(lhs, rhs, min_depth=8)


def test_stirling_shift_identity_formal():
    # exp(F_{nu-1}) = (1 + (1/2 - nu) z^-1) * exp(F_nu) with formal nu.
    nu = n_poly()
    lhs = stirling_exp(nu - 1, 10)
    half_minus = ParamPoly.const(NRING, Q(1, 2)) - nu
    factor = TruncatedSeries("z", NRING, {0: ParamPoly.const(NRING, 1),
                                          -1: half_minus})
    rhs = factor * stirling_exp(nu, 10)
    assert agree_on_window(lhs, rhs, min_depth=8)
