"""Miwa evaluation: determinant formula and Gromov-Witten variables.

In the Miwa parametrization t_k = (1/k) sum_l lambda_l^-k the tau-function
is a ratio det[Phi_k(lambda_l)] / Vandermonde(lambda). Symbolically each
1/lambda_l is an independent truncated variable u_l; factoring
lambda_l^(N-1) out of column l turns the numerator into a polynomial in
the u's divisible by the Vandermonde in u, and the division is done
exactly (synthetic division with a zero-remainder assertion at every
step). Antisymmetrization cancels leading orders, so the quotient is
certified only up to a total degree the routine computes and reports;
comparisons never silently use uncertified coefficients.

The change to Gromov-Witten variables substitutes

    t_k = hbar^(k-1) w_{k-1} / k!,   qt = q / hbar^2,   n = t01 / hbar,

and multiplies by e^qt, producing a Laurent series in hbar with
polynomial coefficients in (w_j, t01, q).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

from ._rat import Q, as_rat
from .series import (ContractViolation, ParamPoly, Ring, TruncatedSeries,
                     weighted_rule)
from .fock import TauSeries, tau_stationary
from .grassmann import phi_absolute


# ---------------------------------------------------------------------------
# Miwa times
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MiwaSpec:
    """Matrix size plus eigenvalue data; None eigenvalues mean symbolic."""

    size: int
    eigenvalues: tuple = None     # rationals for numeric-exact mode
    order: int = 8                # per-variable 1/lambda truncation

    def __post_init__(self):
        if self.eigenvalues is not None:
            vals = tuple(as_rat(v) for v in self.eigenvalues)
            if len(vals) != self.size:
                raise ContractViolation("eigenvalue count != size")
            if len(set(vals)) != self.size:
                raise ContractViolation("Miwa eigenvalues must be distinct")
            object.__setattr__(self, "eigenvalues", vals)


def miwa_ring(size: int, q_cap: int, depth: int) -> Ring:
    names = ("n", "qt") + tuple(f"u{l}" for l in range(1, size + 1))
    u_w = {f"u{l}": 1 for l in range(1, size + 1)}
    return Ring(names, [weighted_rule(names, {"qt": 1}, q_cap),
                        weighted_rule(names, u_w, depth)])


def miwa_times(spec: MiwaSpec, t_cap: int, ring: Ring = None, gw: bool = False,
               hbar=None):
    """Time values t_k (plain) or hbar k! Tr Lambda^{-k-1} (GW weighting).

    Symbolic mode returns ParamPoly values in the u-variables; numeric
    mode returns exact rationals.
    """
    out = {}
    if spec.eigenvalues is None:
        if ring is None:
            raise ContractViolation("symbolic miwa_times needs the ring")
        for k in range(1, t_cap + 1):
            acc = ParamPoly(ring)
            for l in range(1, spec.size + 1):
                acc = acc + ParamPoly.var(ring, f"u{l}", k)
            out[k] = acc / Q(k)
        return out
    for k in range(1, t_cap + 1):
        if gw:
            if hbar is None:
                raise ContractViolation("GW-weighted times need hbar")
            out[k] = as_rat(hbar) * factorial(k) * sum(
                v ** (-k - 1) for v in spec.eigenvalues)
        else:
            out[k] = sum(v ** (-k) for v in spec.eigenvalues) / Q(k)
    return out


def substitute_times(tau: TauSeries, values: dict, target: Ring) -> ParamPoly:
    """Compose a tau jet with explicit time values (ParamPoly per index)."""
    src = tau.ring
    t_idx = {src.index(f"t{k}"): k for k in range(1, tau.t_cap + 1)}
    passthrough = [(i, nm) for i, nm in enumerate(src.names)
                   if not nm.startswith("t")]
    total = ParamPoly(target)
    for expo, coeff in tau.poly.terms.items():
        term = ParamPoly(target, {tuple(0 for _ in target.names): coeff})
        for i, nm in passthrough:
            if expo[i]:
                term = term * ParamPoly.var(target, nm, expo[i])
        ok = True
        for i, k in t_idx.items():
            a = expo[i]
            if not a:
                continue
            val = values.get(k)
            if val is None:
                ok = False
                break
            term = term * val ** a
        if ok:
            total = total + term
    return total


# ---------------------------------------------------------------------------
# determinant representation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MiwaTau:
    """Determinant-side tau with its certified total u-degree."""

    poly: ParamPoly
    size: int
    q_cap: int
    certified_degree: int

    def restricted(self) -> ParamPoly:
        """Only monomials within the certified total u-degree."""
        ring = self.poly.ring
        u_idx = [ring.index(nm) for nm in ring.names if nm.startswith("u")]
        keep = {e: v for e, v in self.poly.terms.items()
                if sum(e[i] for i in u_idx) <= self.certified_degree}
        return ParamPoly(ring, keep)


def _u_total(ring: Ring):
    idx = [ring.index(nm) for nm in ring.names if nm.startswith("u")]

    def total(expo):
        return sum(expo[i] for i in idx)
    return total


def _synthetic_divide(poly: ParamPoly, i_name: str, j_name: str,
                      certified: int) -> ParamPoly:
    """Exact division by (u_i - u_j), asserting a zero remainder.

    The remainder is checked on the certified total-degree range; the
    quotient is certified one degree lower (handled by the caller).
    """
    ring = poly.ring
    i_pos = ring.index(i_name)
    u_total = _u_total(ring)
    by_deg = {}
    top = 0
    for e, v in poly.terms.items():
        a = e[i_pos]
        e2 = list(e)
        e2[i_pos] = 0
        by_deg.setdefault(a, {})[tuple(e2)] = v
        top = max(top, a)
    slices = {a: ParamPoly(ring, terms) for a, terms in by_deg.items()}
    zero = ParamPoly(ring)
    uj = ParamPoly.var(ring, j_name)
    q_slices = {}
    carry = zero
    for a in range(top - 1, -1, -1):
        q_a = slices.get(a + 1, zero) + uj * carry
        q_slices[a] = q_a
        carry = q_a
    remainder = slices.get(0, zero) + uj * carry
    for e, v in remainder.terms.items():
        if u_total(e) <= certified and v:
            raise ContractViolation(
                f"determinant numerator not divisible by ({i_name} - {j_name}) "
                f"within certified degree {certified}")
    out = ParamPoly(ring)
    ui_pow = {a: ParamPoly.var(ring, i_name, a) if a else None
              for a in q_slices}
    for a, q_a in q_slices.items():
        out = out + (q_a if a == 0 else q_a * ui_pow[a])
    return out


def tau_determinant(size: int, depth: int, q_cap: int,
                    charge=None) -> MiwaTau:
    """det[Phi_k(lambda_l)] / Vandermonde as an exact truncated jet.

    ``depth`` is the z-depth each basis vector is built to; the result is
    certified to total u-degree depth - size(size-1)/2. Symbolic mode is
    intended for size <= 3.
    """
    if size < 1:
        raise ContractViolation("matrix size must be >= 1")
    loss = size * (size - 1) // 2
    if depth <= loss:
        raise ContractViolation(
            f"depth {depth} leaves no certified window after the "
            f"antisymmetrization loss {loss}; need depth > {loss}")
    ring = miwa_ring(size, q_cap, depth)
    vectors = [phi_absolute(k, depth, q_cap, charge=charge)
               for k in range(1, size + 1)]
    # column l entry, rescaled: u_l^(size-k) * sum_j phi_{k,j} u_l^j
    entries = {}
    for k, bv in enumerate(vectors, start=1):
        coeffs = bv.series.coeffs
        for l in range(1, size + 1):
            acc = {}
            for e, p in coeffs.items():
                j = (k - 1) - e
                power = (size - k) + j
                if power > depth:
                    continue
                key = [0] * len(ring.names)
                key[ring.index(f"u{l}")] = power
                acc_p = p.embed(ring)
                cur = acc.get(tuple(key))
                acc[tuple(key)] = acc_p if cur is None else cur + acc_p
            entry = ParamPoly(ring)
            for key, p in acc.items():
                entry = entry + p * ParamPoly(ring, {key: Q(1)})
            entries[(k, l)] = entry
    # determinant by permutation expansion (size <= 3 in practice)
    import itertools
    det = ParamPoly(ring)
    for perm in itertools.permutations(range(1, size + 1)):
        sign = _perm_sign(perm)
        term = ParamPoly.const(ring, sign)
        for l, k in enumerate(perm, start=1):
            term = term * entries[(k, l)]
        det = det + term
    certified = depth
    for i in range(1, size + 1):
        for j in range(i + 1, size + 1):
            det = _synthetic_divide(det, f"u{i}", f"u{j}", certified)
            certified -= 1
    out = MiwaTau(det, size, q_cap, certified)
    lead = out.restricted().terms.get(tuple(0 for _ in ring.names))
    if lead != 1:
        raise ContractViolation("determinant tau is not normalized to 1")
    return out


def _perm_sign(perm) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def tau_determinant_oracle(size: int, certified: int, q_cap: int,
                           ring: Ring = None) -> ParamPoly:
    """Partition-sum tau composed with symbolic Miwa times (the oracle side)."""
    if ring is None:
        ring = miwa_ring(size, q_cap, certified)
    tau = tau_stationary(certified, q_cap, validate=False)
    values = miwa_times(MiwaSpec(size), certified, ring)
    return substitute_times(tau, values, ring)


def miwa_agreement(size: int, depth: int, q_cap: int) -> bool:
    """Central identity: determinant tau == oracle tau on the certified set."""
    det = tau_determinant(size, depth, q_cap)
    ring = det.poly.ring
    oracle = tau_determinant_oracle(size, det.certified_degree, q_cap, ring)
    u_total = _u_total(ring)
    lhs = det.restricted()
    rhs = ParamPoly(ring, {e: v for e, v in oracle.terms.items()
                           if u_total(e) <= det.certified_degree})
    return lhs == rhs


# ---------------------------------------------------------------------------
# Gromov-Witten change of variables
# ---------------------------------------------------------------------------

HBAR = "h"


def gw_ring(t_cap: int, q_cap: int) -> Ring:
    names = ("t01", "q") + tuple(f"w{j}" for j in range(t_cap))
    w_w = {f"w{j}": j + 1 for j in range(t_cap)}
    return Ring(names, [weighted_rule(names, {"q": 1}, q_cap),
                        weighted_rule(names, w_w, t_cap)])


def gw_change_of_variables(tau: TauSeries) -> TruncatedSeries:
    """e^qt tau_n(t) in Gromov-Witten variables, as a Laurent series in hbar.

    Substitutes t_k -> hbar^{k-1} w_{k-1}/k!, qt -> q hbar^-2,
    n -> t01/hbar; exact for every retained monomial (the caps of the
    output ring mirror the caps of the input jet).
    """
    if tau.deformation != "qt":
        raise ContractViolation("GW variables apply to the stationary theory")
    src = tau.ring
    if not isinstance(tau.charge, ParamPoly):
        raise ContractViolation("gw_change_of_variables needs a formal charge")
    target = gw_ring(tau.t_cap, tau.d_cap)
    n_i = src.index("n")
    qt_i = src.index("qt")
    t_idx = {src.index(f"t{k}"): k for k in range(1, tau.t_cap + 1)}
    acc = {}
    for expo, coeff in tau.poly.terms.items():
        j = expo[n_i]
        d = expo[qt_i]
        h_expo = -j - 2 * d
        c = coeff
        key = [0] * len(target.names)
        key[target.index("t01")] = j
        key[target.index("q")] = d
        for i, k in t_idx.items():
            a = expo[i]
            if a:
                key[target.index(f"w{k - 1}")] = a
                h_expo += (k - 1) * a
                c = c * Q(1, factorial(k)) ** a
        slot = acc.setdefault(h_expo, {})
        kt = tuple(key)
        slot[kt] = slot.get(kt, Q(0)) + c
    z = TruncatedSeries(HBAR, target,
                        {e: ParamPoly(target, terms)
                         for e, terms in acc.items()})
    # e^{qt} = sum q^d hbar^{-2d} / d!
    pref = TruncatedSeries(HBAR, target, {
        -2 * d: ParamPoly.var(target, "q", d) / Q(factorial(d))
        for d in range(tau.d_cap + 1)})
    return pref * z
