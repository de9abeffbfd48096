"""Exact rational arithmetic shim.

All coefficient arithmetic in this package is exact. ``gmpy2.mpq`` is used
when available (several times faster on the partition-sum and series
kernels); ``fractions.Fraction`` is the drop-in fallback. Both types are
``numbers.Rational``, always stored in lowest terms with positive
denominator, and serialize canonically as ``"p/q"`` (or ``"p"``).
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    Q = Fraction

ZERO = Q(0)
ONE = Q(1)


def as_rat(x):
    """Coerce ints, Fractions, mpqs, or 'p/q' strings to the working type."""
    if isinstance(x, str):
        return Q(x)
    if isinstance(x, Fraction) or isinstance(x, int):
        return Q(x)
    return Q(x)


def rat_str(r) -> str:
    """Canonical string form: 'p' for integers, 'p/q' otherwise."""
    s = str(r)
    return s


def rat_from_str(s: str):
    return Q(s)
