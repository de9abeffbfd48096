"""Exact truncated-series arithmetic.

Two layers:

``ParamPoly``
    Multivariate polynomial over exact rationals in a fixed parameter
    alphabet (a ``Ring``). A ring may carry *cap rules*: linear
    inequalities ``sum(w_i * e_i) <= bound`` on exponent vectors. A
    monomial violating any rule is dropped on construction, so every
    stored polynomial is an honest jet in the capped directions and exact
    in the uncapped ones. A per-variable degree cap is the rule with a
    single unit weight; a weighted time cap puts weight k on t_k; a
    total-degree cap puts weight 1 on a group of variables.

``TruncatedSeries``
    Laurent series in one formal variable with ``ParamPoly`` coefficients
    and explicit truncation bookkeeping. ``order`` is the lowest exponent
    whose coefficient is known; exponents below ``order`` are *unknown*
    (not zero), exponents above the stored maximum are exactly zero.
    ``order is None`` means nothing is unknown (an exact Laurent
    polynomial; the exact zero series has ``order is None`` and no
    coefficients). All operations propagate the guaranteed order
    pessimistically, which is what makes operator-identity checks honest:
    a comparison is only ever performed inside the provably known window.

Everything is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import json
from math import comb

from ._rat import Q, ZERO, as_rat, rat_str


class ContractViolation(ValueError):
    """An operation was called outside its documented precondition."""


class AlphabetMismatch(ContractViolation):
    """Operands live over different parameter rings."""


class UnknownCoefficient(ContractViolation):
    """A coefficient below the truncation order was requested."""


class OrderBudget(ContractViolation):
    """A series operation ran out of truncation-order budget."""


# ---------------------------------------------------------------------------
# parameter rings and polynomials
# ---------------------------------------------------------------------------

class Ring:
    """Immutable parameter alphabet plus cap rules.

    rules: iterable of (weights, bound) with weights aligned to names.
    """

    __slots__ = ("names", "rules", "_index")

    def __init__(self, names=(), rules=()):
        self.names = tuple(names)
        norm = []
        for weights, bound in rules:
            w = tuple(int(x) for x in weights)
            if len(w) != len(self.names):
                raise ContractViolation("cap rule length != alphabet length")
            norm.append((w, int(bound)))
        self.rules = tuple(norm)
        self._index = {nm: i for i, nm in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise AlphabetMismatch(f"parameter {name!r} not in ring {self.names}")

    def admits(self, expo) -> bool:
        for w, bound in self.rules:
            s = 0
            for wi, ei in zip(w, expo):
                if wi:
                    s += wi * ei
            if s > bound:
                return False
        return True

    def var_cap_rule(self, name: str, bound: int):
        w = [0] * len(self.names)
        w[self.index(name)] = 1
        return (tuple(w), bound)

    def __eq__(self, other):
        return (isinstance(other, Ring) and self.names == other.names
                and self.rules == other.rules)

    def __hash__(self):
        return hash((self.names, self.rules))

    def __repr__(self):
        return f"Ring({self.names}, rules={self.rules})"


def weighted_rule(names, weights_by_name, bound):
    """Cap rule for Ring(names): sum weights_by_name[nm]*deg(nm) <= bound."""
    w = tuple(weights_by_name.get(nm, 0) for nm in names)
    return (w, bound)


SCALAR_RING = Ring(())


class ParamPoly:
    """Polynomial in the ring parameters with exact rational coefficients."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: Ring, terms=None):
        self.ring = ring
        clean = {}
        if terms:
            for expo, val in terms.items():
                v = as_rat(val)
                if v and ring.admits(expo):
                    e = tuple(int(x) for x in expo)
                    prev = clean.get(e)
                    v = v + prev if prev is not None else v
                    if v:
                        clean[e] = v
                    else:
                        clean.pop(e, None)
        self.terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def const(cls, ring: Ring, c) -> "ParamPoly":
        c = as_rat(c)
        if not c:
            return cls(ring)
        return cls(ring, {(0,) * len(ring.names): c})

    @classmethod
    def var(cls, ring: Ring, name: str, power: int = 1, coeff=1) -> "ParamPoly":
        e = [0] * len(ring.names)
        e[ring.index(name)] = power
        return cls(ring, {tuple(e): as_rat(coeff)})

    # -- predicates / access ------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self):
        return self.terms.get((0,) * len(self.ring.names), ZERO)

    def coefficient(self, expo):
        return self.terms.get(tuple(expo), ZERO)

    def degree(self, name: str) -> int:
        """Degree in one parameter; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        i = self.ring.index(name)
        return max(e[i] for e in self.terms)

    def is_constant(self) -> bool:
        z = (0,) * len(self.ring.names)
        return all(e == z for e in self.terms)

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other: "ParamPoly"):
        if self.ring != other.ring:
            raise AlphabetMismatch(
                f"ring mismatch: {self.ring!r} vs {other.ring!r}")

    def __add__(self, other):
        if not isinstance(other, ParamPoly):
            other = ParamPoly.const(self.ring, other)
        self._check(other)
        out = dict(self.terms)
        for e, v in other.terms.items():
            w = out.get(e)
            w = v if w is None else w + v
            if w:
                out[e] = w
            else:
                out.pop(e, None)
        p = ParamPoly.__new__(ParamPoly)
        p.ring, p.terms = self.ring, out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = ParamPoly.__new__(ParamPoly)
        p.ring = self.ring
        p.terms = {e: -v for e, v in self.terms.items()}
        return p

    def __sub__(self, other):
        if not isinstance(other, ParamPoly):
            other = ParamPoly.const(self.ring, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            c = as_rat(other)
            if not c:
                return ParamPoly(self.ring)
            p = ParamPoly.__new__(ParamPoly)
            p.ring = self.ring
            p.terms = {e: v * c for e, v in self.terms.items()}
            return p
        self._check(other)
        ring = self.ring
        admits = ring.admits
        out = {}
        a = self.terms
        b = other.terms
        if len(a) > len(b):
            a, b = b, a
        for ea, va in a.items():
            for eb, vb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                cur = out.get(e)
                if cur is None:
                    if admits(e):
                        out[e] = va * vb
                else:
                    cur = cur + va * vb
                    if cur:
                        out[e] = cur
                    else:
                        del out[e]
        p = ParamPoly.__new__(ParamPoly)
        p.ring, p.terms = ring, out
        return p

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ContractViolation("negative polynomial power")
        result = ParamPoly.const(self.ring, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def __truediv__(self, c):
        c = as_rat(c)
        if not c:
            raise ZeroDivisionError("division of ParamPoly by zero scalar")
        return self * (Q(1) / c)

    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return self.ring == other.ring and self.terms == other.terms
        if self.is_constant():
            return self.constant_term() == as_rat(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.ring, frozenset(self.terms.items())))

    # -- calculus / substitution --------------------------------------------

    def diff(self, name: str) -> "ParamPoly":
        i = self.ring.index(name)
        out = {}
        for e, v in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = v * e[i]
        return ParamPoly(self.ring, out)

    def subs(self, assignment) -> "ParamPoly":
        """Substitute rational values for a subset of parameters."""
        idx = {self.ring.index(nm): as_rat(val) for nm, val in assignment.items()}
        out = {}
        for e, v in self.terms.items():
            c = v
            e2 = list(e)
            for i, val in idx.items():
                if e[i]:
                    c = c * val ** e[i]
                    e2[i] = 0
            if c:
                key = tuple(e2)
                cur = out.get(key)
                out[key] = c if cur is None else cur + c
        return ParamPoly(self.ring, out)

    def shift_var(self, name: str, delta) -> "ParamPoly":
        """Replace the parameter by (parameter + delta), exactly."""
        i = self.ring.index(name)
        delta = as_rat(delta)
        out = ParamPoly(self.ring)
        for e, v in self.terms.items():
            k = e[i]
            base = list(e)
            for j in range(k + 1):
                base[i] = j
                c = v * comb(k, j) * delta ** (k - j)
                out = out + ParamPoly(self.ring, {tuple(base): c})
        return out

    def embed(self, target: Ring, name_map=None) -> "ParamPoly":
        """Re-express over a larger ring (optionally renaming parameters)."""
        name_map = name_map or {}
        src = [target.index(name_map.get(nm, nm)) for nm in self.ring.names]
        width = len(target.names)
        out = {}
        for e, v in self.terms.items():
            e2 = [0] * width
            for i, ei in enumerate(e):
                e2[src[i]] += ei
            key = tuple(e2)
            cur = out.get(key)
            out[key] = v if cur is None else cur + v
        return ParamPoly(target, out)

    def eval_all(self, assignment):
        """Evaluate at rational values for every parameter; returns a rational."""
        total = ZERO
        vals = [as_rat(assignment[nm]) for nm in self.ring.names]
        for e, v in self.terms.items():
            c = v
            for val, ei in zip(vals, e):
                if ei:
                    c = c * val ** ei
            total += c
        return total

    # -- presentation ---------------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for e, v in self.sorted_terms():
            mono = "*".join(
                f"{nm}^{p}" if p != 1 else nm
                for nm, p in zip(self.ring.names, e) if p)
            bits.append(f"({rat_str(v)}){'*' + mono if mono else ''}")
        return " + ".join(bits)


# ---------------------------------------------------------------------------
# truncated Laurent series
# ---------------------------------------------------------------------------

NEG_INF = None  # sentinel: nothing unknown below


class TruncatedSeries:
    """Laurent series in one variable over ParamPoly coefficients.

    coeffs maps exponent -> nonzero ParamPoly for exponents in the known
    window. ``order`` is the lowest known exponent (None = exact).
    """

    __slots__ = ("var", "ring", "coeffs", "order")

    def __init__(self, var: str, ring: Ring, coeffs=None, order=None):
        self.var = var
        self.ring = ring
        clean = {}
        if coeffs:
            for e, p in coeffs.items():
                if not isinstance(p, ParamPoly):
                    p = ParamPoly.const(ring, p)
                if p.ring != ring:
                    raise AlphabetMismatch("coefficient ring mismatch")
                if not p.is_zero():
                    if order is not None and e < order:
                        continue
                    clean[int(e)] = p
        self.coeffs = clean
        self.order = None if order is None else int(order)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, var: str, ring: Ring) -> "TruncatedSeries":
        return cls(var, ring)

    @classmethod
    def monomial(cls, var: str, ring: Ring, exponent: int, coeff=1) -> "TruncatedSeries":
        c = coeff if isinstance(coeff, ParamPoly) else ParamPoly.const(ring, coeff)
        return cls(var, ring, {exponent: c})

    @classmethod
    def one(cls, var: str, ring: Ring) -> "TruncatedSeries":
        return cls.monomial(var, ring, 0, 1)

    # -- structure -------------------------------------------------------------

    def is_zero(self) -> bool:
        """True for the exact zero series (nothing stored, nothing unknown)."""
        return not self.coeffs and self.order is None

    def e_max(self):
        """Highest exponent that can carry a nonzero coefficient."""
        if self.coeffs:
            top = max(self.coeffs)
            if self.order is not None:
                return max(top, self.order - 1)
            return top
        if self.order is not None:
            return self.order - 1
        return None  # exact zero

    def e_min_known(self):
        """Lowest exponent with known (possibly zero) coefficient."""
        if self.order is not None:
            return self.order
        return min(self.coeffs) if self.coeffs else 0

    def known_window(self):
        """(lo, hi) of the provably known exponent range, or None for zero."""
        if self.is_zero():
            return None
        hi = self.e_max()
        lo = self.e_min_known()
        return (lo, max(hi, lo))

    def depth(self):
        """Number of known coefficient slots below and including the top."""
        w = self.known_window()
        if w is None:
            return None
        return w[1] - w[0] + 1

    def coefficient(self, exponent: int) -> ParamPoly:
        if self.order is not None and exponent < self.order:
            raise UnknownCoefficient(
                f"coefficient of {self.var}^{exponent} is below truncation "
                f"order {self.order}")
        return self.coeffs.get(exponent, ParamPoly(self.ring))

    def _check(self, other: "TruncatedSeries"):
        if self.var != other.var:
            raise AlphabetMismatch(
                f"series variable mismatch: {self.var!r} vs {other.var!r}")
        if self.ring != other.ring:
            raise AlphabetMismatch("series parameter ring mismatch")

    # -- ring operations --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.monomial(self.var, self.ring, 0, as_rat(other))
        self._check(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.order is None:
            order = other.order
        elif other.order is None:
            order = self.order
        else:
            order = max(self.order, other.order)
        out = dict(self.coeffs)
        for e, p in other.coeffs.items():
            cur = out.get(e)
            s = p if cur is None else cur + p
            if s.is_zero():
                out.pop(e, None)
            else:
                out[e] = s
        return TruncatedSeries(self.var, self.ring, out, order)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.var, self.ring,
                               {e: -p for e, p in self.coeffs.items()},
                               self.order)

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.monomial(self.var, self.ring, 0, as_rat(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TruncatedSeries":
        """Multiply by a scalar or a ParamPoly (no series involved)."""
        if isinstance(c, ParamPoly):
            if c.is_zero():
                return TruncatedSeries.zero(self.var, self.ring)
            return TruncatedSeries(self.var, self.ring,
                                   {e: p * c for e, p in self.coeffs.items()},
                                   self.order)
        c = as_rat(c)
        if not c:
            return TruncatedSeries.zero(self.var, self.ring)
        return TruncatedSeries(self.var, self.ring,
                               {e: p * c for e, p in self.coeffs.items()},
                               self.order)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check(other)
        if self.is_zero() or other.is_zero():
            return TruncatedSeries.zero(self.var, self.ring)
        # order of the product: unknown tails hit the other factor's top
        cands = []
        if self.order is not None:
            cands.append(self.order + other.e_max())
        if other.order is not None:
            cands.append(other.order + self.e_max())
        order = max(cands) if cands else None
        out = {}
        for e1, p1 in self.coeffs.items():
            for e2, p2 in other.coeffs.items():
                e = e1 + e2
                if order is not None and e < order:
                    continue
                prod = p1 * p2
                cur = out.get(e)
                if cur is None:
                    out[e] = prod
                else:
                    s = cur + prod
                    if s.is_zero():
                        del out[e]
                    else:
                        out[e] = s
        return TruncatedSeries(self.var, self.ring, out, order)

    __rmul__ = __mul__

    def shift_exponent(self, j: int) -> "TruncatedSeries":
        """Multiply by var**j (exact)."""
        if self.is_zero():
            return self
        return TruncatedSeries(
            self.var, self.ring,
            {e + j: p for e, p in self.coeffs.items()},
            None if self.order is None else self.order + j)

    def truncate(self, order: int) -> "TruncatedSeries":
        """Forget coefficients below ``order`` (weaker knowledge, never wrong)."""
        if self.order is not None and order < self.order:
            raise OrderBudget(
                f"cannot extend truncation order {self.order} down to {order}")
        return TruncatedSeries(self.var, self.ring,
                               {e: p for e, p in self.coeffs.items() if e >= order},
                               order)

    def derivative(self) -> "TruncatedSeries":
        out = {}
        for e, p in self.coeffs.items():
            if e:
                out[e - 1] = p * e
        return TruncatedSeries(self.var, self.ring, out,
                               None if self.order is None else self.order - 1)

    def map_coeffs(self, fn) -> "TruncatedSeries":
        out = {}
        for e, p in self.coeffs.items():
            q = fn(p)
            if not q.is_zero():
                out[e] = q
        return TruncatedSeries(self.var, self.ring, out, self.order)

    def with_ring(self, target: Ring, name_map=None) -> "TruncatedSeries":
        return TruncatedSeries(
            self.var, target,
            {e: p.embed(target, name_map) for e, p in self.coeffs.items()},
            self.order)

    # -- evaluation ---------------------------------------------------------------

    def eval_rational(self, z_value, params=None):
        """Sum the known window at a rational point (truncated tail dropped)."""
        z = as_rat(z_value)
        params = params or {}
        total = ZERO
        for e, p in self.coeffs.items():
            c = p.eval_all(params) if self.ring.names else p.constant_term()
            total += c * z ** e
        return total

    # -- comparison helpers ----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self.var == other.var and self.ring == other.ring
                and self.order == other.order and self.coeffs == other.coeffs)

    def __repr__(self):
        if self.is_zero():
            return "0"
        bits = []
        for e in sorted(self.coeffs, reverse=True):
            bits.append(f"({self.coeffs[e]!r})*{self.var}^{e}")
        tail = f" + O({self.var}^{self.order - 1})" if self.order is not None else ""
        return " + ".join(bits) + tail


def is_zero_to(s: TruncatedSeries, floor: int) -> bool:
    """Certify that s vanishes on [floor, +inf).

    True iff every stored coefficient is zero and the truncation order
    does not hide anything above ``floor``.
    """
    if any(not p.is_zero() for p in s.coeffs.values()):
        return False
    return s.order is None or s.order <= floor


def common_window(*series):
    """Intersection of known windows; None if any operand is exact zero."""
    lo = None
    hi = None
    for s in series:
        w = s.known_window()
        if w is None:
            continue
        lo = w[0] if lo is None else max(lo, w[0])
        hi = w[1] if hi is None else min(hi, w[1])
    if lo is None:
        return None
    return (lo, hi)


def agree_on_window(a: TruncatedSeries, b: TruncatedSeries, min_depth: int = 1):
    """True if a and b agree on every exponent of their common known window.

    Raises OrderBudget when the comparable window is narrower than
    ``min_depth`` slots, so silent vacuous checks cannot happen.
    """
    if a.is_zero() and b.is_zero():
        return True
    w = common_window(a, b)
    if w is None or w[1] - w[0] + 1 < min_depth:
        raise OrderBudget(
            f"comparable window {w} narrower than required depth {min_depth}")
    for e in range(w[0], w[1] + 1):
        pa = a.coeffs.get(e, ParamPoly(a.ring))
        pb = b.coeffs.get(e, ParamPoly(b.ring))
        if pa != pb:
            return False
    return True


# ---------------------------------------------------------------------------
# transcendental-free series operations
# ---------------------------------------------------------------------------

def mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Product with pessimistic truncation-order bookkeeping."""
    return a * b


def exp_series(a: TruncatedSeries, to_order=None) -> TruncatedSeries:
    """exp of a strictly decaying series (no constant or positive part).

    For a truncated input the result is known on [a.order, 0]. An exact
    input needs an explicit ``to_order``.
    """
    if a.is_zero():
        return TruncatedSeries.one(a.var, a.ring)
    top = max(a.coeffs) if a.coeffs else a.order - 1
    if top >= 0:
        raise ContractViolation(
            "exp_series requires a strictly decaying argument "
            f"(found exponent {top})")
    order = a.order
    if order is None:
        order = to_order
        if order is None:
            raise ContractViolation(
                "exp_series of an exact series needs an explicit to_order")
        a = a.truncate(order)
    result = TruncatedSeries.one(a.var, a.ring) + a
    term = a
    m = 1
    # term is a^m/m!, top exponent <= -m, so the loop ends by order
    while True:
        m += 1
        term = (term * a).scale(Q(1, m))
        term = TruncatedSeries(term.var, term.ring, term.coeffs, order)
        if not term.coeffs:
            break
        result = result + term
        if max(term.coeffs) - 1 < order:
            break
    result = TruncatedSeries(result.var, result.ring, result.coeffs, order)
    return result


def poly_exp_nilpotent(p: ParamPoly, bound: int = 10000) -> ParamPoly:
    """exp of a ParamPoly with no constant term, nilpotent under its caps."""
    if not p.constant_term() == 0:
        raise ContractViolation("poly_exp_nilpotent needs a zero constant term")
    result = ParamPoly.const(p.ring, 1) + p
    term = p
    m = 1
    while not term.is_zero():
        m += 1
        if m > bound:
            raise ContractViolation("poly_exp_nilpotent did not terminate; "
                                    "argument is not nilpotent under the caps")
        term = term * p / Q(m)
        result = result + term
    return result


def exp_nilpotent_series(s: TruncatedSeries, bound: int = 10000) -> TruncatedSeries:
    """exp of a series whose powers vanish under the coefficient-ring caps.

    Used for exponentials with positive variable exponents whose
    coefficients carry capped parameters (each power raises the capped
    weight, so the sum terminates).
    """
    const = s.coeffs.get(0)
    if const is not None and const.constant_term() != 0:
        raise ContractViolation("exp_nilpotent_series needs zero constant term")
    result = TruncatedSeries.one(s.var, s.ring) + s
    term = s
    m = 1
    while not (term.is_zero() or not term.coeffs):
        m += 1
        if m > bound:
            raise ContractViolation("exp_nilpotent_series did not terminate")
        term = (term * s).scale(Q(1, m))
        result = result + term
    return result


def log1p_series(a: TruncatedSeries, to_order=None) -> TruncatedSeries:
    """log(1 + a) for strictly decaying a."""
    if a.is_zero():
        return TruncatedSeries.zero(a.var, a.ring)
    top = max(a.coeffs) if a.coeffs else a.order - 1
    if top >= 0:
        raise ContractViolation("log1p_series requires a strictly decaying argument")
    order = a.order if a.order is not None else to_order
    if order is None:
        raise ContractViolation("log1p_series of an exact series needs to_order")
    a = a.truncate(order)
    result = a
    term = a
    m = 1
    while True:
        m += 1
        term = term * a
        term = TruncatedSeries(term.var, term.ring, term.coeffs, order)
        if not term.coeffs:
            break
        result = result + term.scale(Q((-1) ** (m + 1), m))
        if max(term.coeffs) - 1 < order:
            break
    return TruncatedSeries(result.var, result.ring, result.coeffs, order)


def _binom_rat(j: int, i: int):
    """Generalized binomial C(j, i) for integer j (possibly negative)."""
    num = ONE = Q(1)
    for r in range(i):
        num = num * Q(j - r, r + 1)
    return num


def shift_argument(f: TruncatedSeries, c, to_order=None) -> TruncatedSeries:
    """f(var) -> f(var + c) for rational c.

    Positive exponents expand by the binomial theorem (finite); negative
    exponents expand downward and are cut at the result order, which
    equals the input order (an exact Laurent *polynomial-free* input,
    i.e. with negative exponents and order None, needs ``to_order``).
    """
    c = as_rat(c)
    if f.is_zero() or not c:
        return f
    has_neg = any(e < 0 for e in f.coeffs)
    order = f.order
    if order is None and has_neg:
        order = to_order
        if order is None:
            raise ContractViolation(
                "shift_argument of an exact Laurent series with negative "
                "exponents needs to_order")
    out = TruncatedSeries(f.var, f.ring, {}, order)
    for e, p in f.coeffs.items():
        if e >= 0:
            expo_terms = {e - i: p * (_binom_rat(e, i) * c ** i)
                          for i in range(e + 1)}
        else:
            stop = e - (order if order is not None else e)  # depth below e
            expo_terms = {}
            for i in range(0, max(stop, 0) + 1):
                if order is not None and e - i < order:
                    break
                expo_terms[e - i] = p * (_binom_rat(e, i) * c ** i)
        out = out + TruncatedSeries(f.var, f.ring, expo_terms, order)
    return out


def geometric_inverse(var: str, ring: Ring, a, b, order: int) -> TruncatedSeries:
    """1/(a*var + b) as a decaying Laurent series, a != 0, known to ``order``."""
    a = as_rat(a)
    b = as_rat(b)
    if not a:
        raise ContractViolation("geometric_inverse needs a nonzero leading term")
    # 1/(a z + b) = (1/(a z)) * 1/(1 + b/(a z))
    coeffs = {}
    ratio = -b / a
    val = Q(1) / a
    e = -1
    while e >= order:
        coeffs[e] = ParamPoly.const(ring, val)
        val = val * ratio
        e -= 1
    return TruncatedSeries(var, ring, coeffs, order)


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------

def ring_to_obj(ring: Ring):
    return {"names": list(ring.names),
            "rules": [{"weights": list(w), "bound": b} for w, b in ring.rules]}


def ring_from_obj(obj) -> Ring:
    return Ring(obj["names"],
                [(tuple(r["weights"]), r["bound"]) for r in obj["rules"]])


def poly_to_obj(p: ParamPoly):
    return {
        "ring": ring_to_obj(p.ring),
        "terms": {",".join(str(x) for x in e): rat_str(v)
                  for e, v in p.sorted_terms()},
    }


def poly_from_obj(obj) -> ParamPoly:
    ring = ring_from_obj(obj["ring"])
    terms = {}
    for key, val in obj["terms"].items():
        expo = tuple(int(x) for x in key.split(",")) if key else ()
        terms[expo] = as_rat(val)
    return ParamPoly(ring, terms)


def series_to_obj(s: TruncatedSeries):
    return {
        "kind": "truncated-series",
        "variable": s.var,
        "order": s.order,
        "ring": ring_to_obj(s.ring),
        "coefficients": {
            str(e): {",".join(str(x) for x in ee): rat_str(v)
                     for ee, v in s.coeffs[e].sorted_terms()}
            for e in sorted(s.coeffs)
        },
    }


def series_from_obj(obj) -> TruncatedSeries:
    ring = ring_from_obj(obj["ring"])
    coeffs = {}
    for e_str, terms in obj["coefficients"].items():
        terms_parsed = {}
        for key, val in terms.items():
            expo = tuple(int(x) for x in key.split(",")) if key else ()
            terms_parsed[expo] = as_rat(val)
        coeffs[int(e_str)] = ParamPoly(ring, terms_parsed)
    return TruncatedSeries(obj["variable"], ring, coeffs, obj["order"])


def to_canonical_json(obj) -> str:
    """Deterministic text form; round-trips bit-exactly."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
