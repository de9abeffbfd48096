"""Connected stationary Gromov-Witten invariants from the tau-function.

The generating series in GW variables is exponential: taking its log and
reading off the coefficient of hbar^(2g-2) q^d prod w_{k_i} t01^p gives
the connected invariant once multiplicity factorials are restored. Every
nonzero entry must sit on the virtual-dimension locus

    sum_i (k_i + 1) = 2g - 2 + m + p + 2d,

where m counts point-class descendants and p the extra variable's power;
violations are hard failures, as are odd powers of hbar. Entries whose
moduli data are unstable (d = 0 and 2g - 2 + m + p <= 0) would not be
invariants; they are kept in a separate normalization section (empty for
this theory, which the tests pin down).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from ._rat import Q, rat_str
from .series import (ContractViolation, ParamPoly, TruncatedSeries)


class ExtractionError(ContractViolation):
    """The generating series violated a structural expectation."""


@dataclass
class GwTable:
    """Connected invariants keyed by (genus, degree, descendants, t01 power)."""

    entries: dict = field(default_factory=dict)
    non_geometric: dict = field(default_factory=dict)
    caps: dict = field(default_factory=dict)

    def value(self, genus: int, degree: int, descendants, t01_power: int = 0):
        key = (genus, degree, tuple(sorted(descendants)), t01_power)
        return self.entries.get(key, Q(0))

    def to_rows(self):
        rows = []
        for (g, d, ks, p), v in sorted(self.entries.items()):
            rows.append({"genus": g, "degree": d,
                         "descendants": ",".join(str(k) for k in ks),
                         "t01_power": p, "value": rat_str(v)})
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, fieldnames=["genus", "degree", "descendants", "t01_power",
                             "value"])
        writer.writeheader()
        for row in self.to_rows():
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"caps": self.caps, "entries": self.to_rows(),
                           "non_geometric": [
                               {"key": list(k), "value": rat_str(v)}
                               for k, v in sorted(self.non_geometric.items())]},
                          sort_keys=True, separators=(",", ":"))


def log_series_nilpotent(z: TruncatedSeries) -> TruncatedSeries:
    """log of a series equal to 1 plus a cap-nilpotent part."""
    one = TruncatedSeries.one(z.var, z.ring)
    u = z - one
    const = u.coeffs.get(0)
    if const is not None and const.constant_term() != 0:
        raise ExtractionError("generating series does not start at 1")
    result = u
    term = u
    m = 1
    while True:
        m += 1
        if m > 10000:
            raise ExtractionError("log did not terminate; series not nilpotent")
        term = term * u
        if term.is_zero() or not term.coeffs:
            break
        result = result + term.scale(Q((-1) ** (m + 1), m))
    return result


def connected_invariants(z: TruncatedSeries, t_cap: int = None,
                         q_cap: int = None) -> GwTable:
    """Extract the table of connected invariants from the GW series.

    ``z`` is the output of the change of variables: a Laurent series in
    hbar over (t01, q, w_0, w_1, ...). Odd hbar powers and off-dimension
    entries raise; unstable corners land in the normalization section.
    """
    ring = z.ring
    w_names = [nm for nm in ring.names if nm.startswith("w")]
    w_idx = {ring.index(nm): int(nm[1:]) for nm in w_names}
    t01_i = ring.index("t01")
    q_i = ring.index("q")
    logz = log_series_nilpotent(z)
    table = GwTable(caps={"t_cap": t_cap, "q_cap": q_cap})
    for h_expo, poly in sorted(logz.coeffs.items()):
        if poly.is_zero():
            continue
        if h_expo % 2:
            raise ExtractionError(
                f"odd hbar power {h_expo} with coefficient {poly!r}")
        genus = (h_expo + 2) // 2
        if genus < 0:
            raise ExtractionError(f"negative genus from hbar^{h_expo}")
        for expo, coeff in poly.terms.items():
            degree = expo[q_i]
            p = expo[t01_i]
            descendants = []
            factor = Q(1)
            for i, k in w_idx.items():
                a = expo[i]
                if a:
                    descendants.extend([k] * a)
                    for r in range(2, a + 1):
                        factor *= r
            for r in range(2, p + 1):
                factor *= r
            value = coeff * factor
            key = (genus, degree, tuple(sorted(descendants)), p)
            m = len(descendants)
            stable = degree >= 1 or (2 * genus - 2 + m + p) > 0
            if not stable:
                table.non_geometric[key] = \
                    table.non_geometric.get(key, Q(0)) + value
                continue
            lhs = sum(k + 1 for k in descendants)
            rhs = 2 * genus - 2 + m + p + 2 * degree
            if lhs != rhs:
                raise ExtractionError(
                    f"dimension filter violated at {key}: "
                    f"sum(k_i+1)={lhs} != 2g-2+n+2d={rhs}, value {value}")
            table.entries[key] = table.entries.get(key, Q(0)) + value
    table.entries = {k: v for k, v in table.entries.items() if v}
    table.non_geometric = {k: v for k, v in table.non_geometric.items() if v}
    return table


def string_residual(z: TruncatedSeries) -> TruncatedSeries:
    """(t01 w_0 / hbar^2 + sum_k w_k d/dw_{k-1} - d/dt01) applied to z.

    Identically zero on the retained jet for the true generating series.
    """
    ring = z.ring
    w_names = sorted((nm for nm in ring.names if nm.startswith("w")),
                     key=lambda nm: int(nm[1:]))
    t01w0 = ParamPoly.var(ring, "t01") * ParamPoly.var(ring, "w0")
    out = z.scale(t01w0).shift_exponent(-2)
    for nm in w_names[1:]:
        k = int(nm[1:])
        lower = f"w{k - 1}"
        wk = ParamPoly.var(ring, nm)
        out = out + z.map_coeffs(lambda p, _w=wk, _l=lower: _w * p.diff(_l))
    out = out - z.map_coeffs(lambda p: p.diff("t01"))
    return out
