"""Bernoulli polynomials, charged-vacuum moments, and Stirling-type series.

The asymptotic expansion of the gamma function is used in the normalized
form

    Gamma(z + 1/2 - n) / (sqrt(2*pi) * z**z * exp(-z)) = z**(-n) * exp(F_n(z)),

where F_n(z) = sum_{k>=1} c_k(n) / (k z**k) and
c_k(n) = B_{k+1}(n + 1/2) / (k + 1). Only the right-hand side is ever
stored: every gamma-type object in the package is an honest Laurent
series (times an integer power of the variable), taken relative to the
non-elementary weight sqrt(2*pi) * z**z * exp(-z), which cancels in all
identities computed here. Nonperturbative corrections are dropped
throughout: the asymptotic series *is* the definition at this layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

from ._rat import Q, as_rat
from .series import (ContractViolation, ParamPoly, Ring, TruncatedSeries,
                     exp_series)


@lru_cache(maxsize=None)
def bernoulli_number(m: int):
    """B_m with B_1 = -1/2, from sum_{j<=m} C(m+1, j) B_j = 0."""
    if m == 0:
        return Q(1)
    if m > 1 and m % 2:
        return Q(0)
    s = Q(0)
    for j in range(m):
        s += comb(m + 1, j) * bernoulli_number(j)
    return -s / Q(m + 1)


@lru_cache(maxsize=None)
def bernoulli_poly(k: int):
    """Ascending coefficient tuple of B_k(x).

    Defined by the expansion z*exp(x*z)/(exp(z)-1) = sum B_k(x) z^k / k!;
    equivalently B_k(x) = sum_j C(k, j) B_j x^(k-j). The generating-series
    definition is re-verified by resubstitution in the test-suite.
    """
    if k < 0:
        raise ContractViolation("bernoulli_poly needs k >= 0")
    coeffs = [Q(0)] * (k + 1)
    for j in range(k + 1):
        coeffs[k - j] = comb(k, j) * bernoulli_number(j)
    return tuple(coeffs)


def bernoulli_poly_at(k: int, x):
    """B_k evaluated at a rational or a ParamPoly argument (Horner)."""
    coeffs = bernoulli_poly(k)
    if isinstance(x, ParamPoly):
        acc = ParamPoly.const(x.ring, coeffs[-1])
        for c in reversed(coeffs[:-1]):
            acc = acc * x + ParamPoly.const(x.ring, c)
        return acc
    x = as_rat(x)
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def charge_moment(k: int, n):
    """k-th regularized moment of the charge-n vacuum:  B_{k+1}(n+1/2)/(k+1).

    Accepts a rational n or a ParamPoly (formal charge); the k=1 value is
    n^2/2 - 1/24.
    """
    if k < 1:
        raise ContractViolation("charge_moment needs k >= 1")
    if isinstance(n, ParamPoly):
        half = ParamPoly.const(n.ring, Q(1, 2))
        return bernoulli_poly_at(k + 1, n + half) / Q(k + 1)
    return bernoulli_poly_at(k + 1, as_rat(n) + Q(1, 2)) / Q(k + 1)


@dataclass(frozen=True)
class StirlingSeries:
    """F_n(z) = sum_{k=1}^{M} c_k(n)/(k z^k) together with its exponential."""

    charge: object            # Q or ParamPoly
    order: int                # M: retained through z^-M
    series: TruncatedSeries   # F_n(z), known on [-M, -1]

    @property
    def exponential(self) -> TruncatedSeries:
        """exp(F_n(z)), known on [-M, 0], constant term 1."""
        return exp_series(self.series)


def stirling_series(n, order: int, ring: Ring = None, var: str = "z") -> StirlingSeries:
    """Stirling tail F_n(z) to z^-order, exact coefficients."""
    if order < 1:
        raise ContractViolation("stirling_series needs order >= 1")
    if isinstance(n, ParamPoly):
        ring = n.ring
    elif ring is None:
        ring = Ring(())
    coeffs = {}
    for k in range(1, order + 1):
        ck = charge_moment(k, n)
        if isinstance(ck, ParamPoly):
            coeffs[-k] = ck / Q(k)
        else:
            coeffs[-k] = ParamPoly.const(ring, ck / Q(k))
    f = TruncatedSeries(var, ring, coeffs, -order)
    return StirlingSeries(n, order, f)


def stirling_exp(n, order: int, ring: Ring = None, var: str = "z") -> TruncatedSeries:
    """exp(F_n(z)) as a series known on [-order, 0]."""
    return stirling_series(n, order, ring, var).exponential


def gamma_ratio_series(a, order: int, ring: Ring = None, var: str = "z") -> TruncatedSeries:
    """Normalized gamma asymptotics Gamma(z+a) / (sqrt(2*pi) z^z e^-z).

    Requires a - 1/2 to be an integer so the z^(a - 1/2) prefactor is an
    honest Laurent monomial: the result is z^(a-1/2) * exp(F_{1/2-a}(z)).
    A formal charge shift is handled by ``stirling_exp`` directly, with
    the (then symbolic) power of z carried by the caller.
    """
    a = as_rat(a)
    power = a - Q(1, 2)
    if power.denominator != 1:
        raise ContractViolation(
            "gamma_ratio_series needs a - 1/2 integral; use stirling_exp "
            "and carry the symbolic power of z for formal shifts")
    nu = Q(1, 2) - a
    if ring is None:
        ring = Ring(())
    return stirling_exp(nu, order, ring, var).shift_exponent(int(power))
