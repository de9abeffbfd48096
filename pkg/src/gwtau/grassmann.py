"""Sato Grassmannian basis vectors and Kac-Schwarz operators.

The point of the Grassmannian is spanned by normalized vectors
``Phi_k = z^(k-1) (1 + O(1/z))``. In the absolute theory

    Phi_k = sum_{l>=0} qt^l / l! * z^(k-1-l) * exp(F_{n-k+l+1}(z)),

a polynomial in the deformation parameter ``qt`` up to its cap; the
relative theory replaces the single parameter by s_1, s_2, ... summed
over multisets of parts weighted by their total size. Two difference
operators act on these series:

    b     : recursion,  b Phi_k = Phi_{k+1}
    a     : lowering,   a Phi_1 = 0,  a Phi_k = (k-1) Phi_{k-1}

with [a, b] = 1. ``b`` is a first-order shift ``f(z) -> P(z)(z+1)f(z+1)``
whose prefactor P is the exponential of an exact Laurent series with no
constant term (the transcendental constants of the two exponential
factors cancel, keeping all arithmetic rational). Each application of
``b`` or its inverse moves the certified window; callers compare
identities only inside the window the series themselves report.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

from ._rat import Q, as_rat
from .series import (ContractViolation, ParamPoly, Ring, TruncatedSeries,
                     exp_series, geometric_inverse, shift_argument,
                     weighted_rule)
from .specialfn import stirling_exp
from .fock import partitions_up_to

VAR = "z"


def absolute_ring(q_cap: int) -> Ring:
    names = ("n", "qt")
    return Ring(names, [weighted_rule(names, {"qt": 1}, q_cap)])


def relative_ring(weight_cap: int) -> Ring:
    names = ("n",) + tuple(f"s{m}" for m in range(1, weight_cap + 1))
    weights = {f"s{m}": m for m in range(1, weight_cap + 1)}
    return Ring(names, [weighted_rule(names, weights, weight_cap)])


@dataclass(frozen=True)
class BasisVector:
    """One normalized basis vector of a Grassmannian point."""

    index: int
    charge: object              # ParamPoly (formal) or rational
    series: TruncatedSeries
    kind: str                   # "absolute" | "relative"
    cap: int                    # qt degree cap, or s weight cap

    def __post_init__(self):
        lead = self.series.coefficient(self.index - 1)
        if not lead.is_constant() or lead.constant_term() != 1:
            raise ContractViolation(
                f"basis vector {self.index} is not normalized: leading "
                f"coefficient {lead!r}")


def _charge_poly(ring: Ring, charge):
    if isinstance(charge, ParamPoly):
        return charge
    if charge is None:
        return ParamPoly.var(ring, "n")
    return ParamPoly.const(ring, as_rat(charge))


def phi_absolute(k: int, order: int, q_cap: int, charge=None,
                 ring: Ring = None) -> BasisVector:
    """Absolute basis vector Phi_k to depth ``order`` below its top."""
    if k < 1:
        raise ContractViolation("basis vectors are indexed from 1")
    if ring is None:
        ring = absolute_ring(q_cap)
    n = _charge_poly(ring, charge)
    qt = ParamPoly.var(ring, "qt")
    total = TruncatedSeries.zero(VAR, ring)
    for l in range(q_cap + 1):
        nu = n + Q(l + 1 - k)
        tail = stirling_exp(nu, order, ring)
        coeff = qt ** l / Q(factorial(l))
        total = total + tail.shift_exponent(k - 1 - l).scale(coeff)
    return BasisVector(k, n, total, "absolute", q_cap)


def phi_relative(k: int, order: int, weight_cap: int, charge=None,
                 ring: Ring = None) -> BasisVector:
    """Relative basis vector: multiset sum over deformation parts."""
    if k < 1:
        raise ContractViolation("basis vectors are indexed from 1")
    if ring is None:
        ring = relative_ring(weight_cap)
    n = _charge_poly(ring, charge)
    total = TruncatedSeries.zero(VAR, ring)
    for mu in partitions_up_to(weight_cap):
        w = sum(mu)
        coeff = ParamPoly.const(ring, 1)
        for part in set(mu):
            c = mu.count(part)
            coeff = coeff * (ParamPoly.var(ring, f"s{part}", c)
                             / Q(factorial(c)))
        nu = n + Q(w + 1 - k)
        tail = stirling_exp(nu, order, ring)
        total = total + tail.shift_exponent(k - 1 - w).scale(coeff)
    return BasisVector(k, n, total, "relative", weight_cap)


def w_inverse_transform(monomials, order: int, ring: Ring = None) -> TruncatedSeries:
    """Linear extension of z^k -> z^k * exp(F_{-k}(z)).

    ``monomials`` maps integer exponents to rational or ParamPoly
    coefficients; this is the series image of a Laurent polynomial under
    the integral transform realizing the dressing operator, relative to
    the reference weight sqrt(2*pi) z^z e^-z.
    """
    if ring is None:
        ring = Ring(())
    total = TruncatedSeries.zero(VAR, ring)
    for e, c in monomials.items():
        tail = stirling_exp(Q(-e), order, ring)
        if not isinstance(c, ParamPoly):
            c = ParamPoly.const(ring, c)
        total = total + tail.shift_exponent(e).scale(c)
    return total


# ---------------------------------------------------------------------------
# Kac-Schwarz operators
# ---------------------------------------------------------------------------

def _shift_log_series(ring: Ring, n: ParamPoly, sign: int, depth: int) -> TruncatedSeries:
    """(z - n) log(1 + sign/z) - sign, an exact decaying series to ``depth``.

    sign=+1 is the forward prefactor exponent, sign=-1 the inverse one;
    in both cases the constant term cancels against the e^{-sign} of the
    shift factor, so the result starts at z^-1.
    """
    coeffs = {}
    for m in range(1, -depth + 1):
        c = ParamPoly.const(ring, Q(sign, m + 1)) + n * Q(1, m)
        coeffs[-m] = c * Q((-sign) ** m)
    return TruncatedSeries(VAR, ring, coeffs, depth)


def _b_prefactor(ring: Ring, n: ParamPoly, sign: int, depth: int) -> TruncatedSeries:
    return exp_series(_shift_log_series(ring, n, sign, depth))


def apply_b(f: TruncatedSeries, charge, direction: str = "forward",
            to_order: int = None) -> TruncatedSeries:
    """Recursion operator b (or its inverse) applied to a series.

    Forward: P(z) (z+1) f(z+1); inverse: P~(z) f(z-1) / (z-1). The
    prefactor series are expanded deep enough to preserve the certified
    floor of the input; exact inputs need ``to_order``.
    """
    ring = f.ring
    n = _charge_poly(ring, charge)
    if f.is_zero():
        return f
    if direction == "forward":
        sh = shift_argument(f, 1, to_order=to_order)
        zp1 = TruncatedSeries(VAR, ring, {1: ParamPoly.const(ring, 1),
                                          0: ParamPoly.const(ring, 1)})
        base = zp1 * sh
    elif direction == "inverse":
        sh = shift_argument(f, -1, to_order=to_order)
        floor = sh.order if sh.order is not None else to_order
        if floor is None:
            raise ContractViolation(
                "apply_b inverse on an exact series needs to_order")
        inv = geometric_inverse(VAR, ring, 1, -1, floor - sh.e_max() - 1)
        base = inv * sh
    else:
        raise ContractViolation(f"unknown direction {direction!r}")
    floor = base.order if base.order is not None else to_order
    if floor is None:
        raise ContractViolation("apply_b on an exact series needs to_order")
    depth = floor - base.e_max() - 1
    pref = _b_prefactor(ring, n, +1 if direction == "forward" else -1, depth)
    out = pref * base
    return out


def apply_a(f: TruncatedSeries, charge, deformation="qt",
            to_order: int = None) -> TruncatedSeries:
    """Lowering operator.

    deformation="qt": 1 + qt b^-2 + (n + 1/2 - z) b^-1 (absolute);
    deformation=<weight cap W>: 1 + (n + 1/2 - z) b^-1 +
    sum_{m<=W} m s_m b^(-m-1) (relative).
    """
    ring = f.ring
    n = _charge_poly(ring, charge)
    b1 = apply_b(f, charge, "inverse", to_order)
    half = ParamPoly.const(ring, Q(1, 2))
    out = f + b1.scale(n + half) - b1.shift_exponent(1)
    if deformation == "qt":
        b2 = apply_b(b1, charge, "inverse")
        out = out + b2.scale(ParamPoly.var(ring, "qt"))
    else:
        weight_cap = int(deformation)
        bj = b1
        for m in range(1, weight_cap + 1):
            bj = apply_b(bj, charge, "inverse")
            out = out + bj.scale(ParamPoly.var(ring, f"s{m}", 1, m))
    return out


def apply_quantum_curve(f: TruncatedSeries, charge, deformation="qt",
                        to_order: int = None) -> TruncatedSeries:
    """The composite a b = b + qt b^-1 + n + 1/2 - z (absolute), or the
    relative analogue computed as a(b(f))."""
    ring = f.ring
    n = _charge_poly(ring, charge)
    if deformation == "qt":
        half = ParamPoly.const(ring, Q(1, 2))
        fwd = apply_b(f, charge, "forward", to_order)
        inv = apply_b(f, charge, "inverse", to_order)
        return (fwd + inv.scale(ParamPoly.var(ring, "qt"))
                + f.scale(n + half) - f.shift_exponent(1))
    return apply_a(apply_b(f, charge, "forward", to_order), charge,
                   deformation, to_order)


def b_shift_expansion(ring: Ring, charge, depth: int) -> TruncatedSeries:
    """Expansion of b e^{-d/dz} acting on 1: P(z) (z+1).

    Known to start z + 1/2 - n + (n^2/2 - 1/24)/z + ...
    """
    n = _charge_poly(ring, charge)
    zp1 = TruncatedSeries(VAR, ring, {1: ParamPoly.const(ring, 1),
                                      0: ParamPoly.const(ring, 1)})
    return _b_prefactor(ring, n, +1, depth) * zp1


def string_residual_phi(bv: BasisVector) -> TruncatedSeries:
    """(n/z - d/dz - d/dn) Phi, which must vanish on the certified window."""
    f = bv.series
    ring = f.ring
    n = _charge_poly(ring, bv.charge)
    term_n_over_z = f.scale(n).shift_exponent(-1)
    term_dz = f.derivative()
    term_dn = f.map_coeffs(lambda p: p.diff("n"))
    return term_n_over_z - term_dz - term_dn


# ---------------------------------------------------------------------------
# conjugating flow series g: exp(g(z) d/dz) . z = 1 - exp(-z)
# ---------------------------------------------------------------------------

def _poly_mul(a, b, cap):
    out = [Q(0)] * (cap + 1)
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if i + j > cap:
                break
            if bj:
                out[i + j] += ai * bj
    while out and not out[-1]:
        out.pop()
    return out


def _poly_diff(a):
    return [a[i] * i for i in range(1, len(a))]


def _exp_flow_on_z(g, cap):
    """exp(g(z) d/dz) . z as an ascending series to z^cap; g ascending."""
    total = [Q(0), Q(1)]  # z
    term = [Q(0), Q(1)]
    m = 0
    while True:
        m += 1
        term = _poly_mul(g, _poly_diff(term), cap)
        if not term:
            break
        term = [c / Q(m) for c in term]
        total = [x + y for x, y in
                 zip(total + [Q(0)] * (len(term) - len(total)),
                     term + [Q(0)] * (len(total) - len(term)))]
        if m > cap:
            break
    return total


@lru_cache(maxsize=None)
def flow_series(order: int):
    """Coefficients (g_2, ..., g_order) of the flow generator.

    g(z) in z^2 Q[[z]] is fixed by requiring that the exponential flow of
    the vector field g(z) d/dz maps z to 1 - exp(-z); the coefficients
    are determined one order at a time (g_T enters linearly at order T).
    """
    if order < 2:
        raise ContractViolation("flow_series needs order >= 2")
    g = [Q(0), Q(0)]  # ascending, g[0]=g[1]=0
    for t in range(2, order + 1):
        g.append(Q(0))
        flowed = _exp_flow_on_z(g, t)
        current = flowed[t] if len(flowed) > t else Q(0)
        target = Q((-1) ** (t + 1), factorial(t))
        g[t] = target - current
    return tuple(g[2:])


def flow_resubstitution_defect(g_coeffs, order: int):
    """Max-order defect of exp(g d/dz).z against 1 - exp(-z); zero if exact."""
    g = [Q(0), Q(0)] + list(g_coeffs)
    flowed = _exp_flow_on_z(g, order)
    defects = []
    for t in range(0, order + 1):
        want = Q(0) if t == 0 else Q((-1) ** (t + 1), factorial(t))
        have = flowed[t] if len(flowed) > t else Q(0)
        defects.append(have - want)
    return defects


def apply_exp_flow_operator(poly, sign: int, order_hint: int = None):
    """exp(sign * y) acting on a polynomial, y = z g(d/dz).

    ``poly`` is an ascending coefficient list; the operator lowers degree,
    so the sum terminates. Used for the rational-function identity
    exp(-y) . z^k = z (z+1) ... (z+k-1).
    """
    deg = len(poly) - 1
    g = [Q(0), Q(0)] + list(flow_series(max(deg, 2)))

    def apply_y(p):
        # y p = z * sum_j g_j d^j p / dz^j
        out = [Q(0)] * (len(p) + 1)
        for j in range(2, len(g)):
            gj = g[j]
            if not gj:
                continue
            d = p
            for _ in range(j):
                d = _poly_diff(d)
            if not d:
                break
            for i, c in enumerate(d):
                if c:
                    out[i + 1] += gj * c
        while out and not out[-1]:
            out.pop()
        return out

    total = list(poly)
    term = list(poly)
    m = 0
    while True:
        m += 1
        term = apply_y(term)
        if not term:
            break
        term = [c * Q(sign, m) for c in term]
        total = [x + y for x, y in
                 zip(total + [Q(0)] * (len(term) - len(total)),
                     term + [Q(0)] * (len(total) - len(term)))]
    return total


def rising_factorial_coeffs(k: int):
    """Ascending coefficients of z (z+1) ... (z+k-1)."""
    out = [Q(0), Q(1)]
    for j in range(1, k):
        out = _poly_mul(out, [Q(j), Q(1)], k + 1)
    return out
