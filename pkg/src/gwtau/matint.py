"""High-precision numeric validation of the integral representations.

All integrands here are of the Laplace type exp(a y - b e^y + c e^-y).
For c > 0 the integral is asymptotic rather than convergent: the
integrand dips to an exponentially small minimum on the left before
blowing up. Quadrature therefore truncates the domain at that dip (the
optimal truncation of the asymptotic series); the neglected piece is of
the order of the dip value and is carried in the reported error budget,
never silently dropped. Comparisons against the exact truncated series
use the modeled tolerance

    2 * |first omitted series term| + exp(-2 pi z) + quadrature error,

matching the expected nonperturbative corrections of the gamma-function
asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp

from ._rat import Q, as_rat
from .series import ContractViolation, ParamPoly, Ring
from .grassmann import phi_absolute


@dataclass(frozen=True)
class QuadratureSpec:
    """Working precision and truncation policy for one integral family."""

    digits: int = 40
    guard_digits: int = 15
    tail_drop: int = 20      # extra decades below peak before cutting

    @property
    def dps(self) -> int:
        return self.digits + self.guard_digits


@dataclass(frozen=True)
class IntegralResult:
    value: object            # mpf
    quad_error: object       # mpf estimate from the rule
    cut_error: object        # bound for the truncated-domain remainder


@dataclass(frozen=True)
class AsymptoticReport:
    numeric: object
    series_value: object
    order: int
    discrepancy: object
    tolerance: object

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tolerance


def _exponent(a, b, c, y):
    return a * y - b * mpmath.exp(y) + c * mpmath.exp(-y)


def _saddles(a, b, c):
    """Stationary points of a y - b e^y + c e^-y: b u^2 - a u + c = 0, u=e^y."""
    disc = a * a - 4 * b * c
    if disc <= 0:
        raise ContractViolation("degenerate or complex saddle: a^2 <= 4bc")
    root = mpmath.sqrt(disc)
    u_hi = (a + root) / (2 * b)
    u_lo = (a - root) / (2 * b) if c != 0 else None
    return u_lo, u_hi


def raw_exp_integral(a, b, c, spec: QuadratureSpec) -> IntegralResult:
    """integral of exp(a y - b e^y + c e^-y) dy on the truncated line.

    Requires a > 0, b > 0. For c > 0 the left end is cut at the dip of
    the integrand; for c <= 0 at the point where the integrand falls
    below the working floor.
    """
    with mp.workdps(spec.dps):
        a = mpmath.mpf(str(as_rat(a))) if not isinstance(a, mpmath.mpf) else a
        b = mpmath.mpf(str(as_rat(b))) if not isinstance(b, mpmath.mpf) else b
        c = mpmath.mpf(str(as_rat(c))) if not isinstance(c, mpmath.mpf) else c
        if a <= 0 or b <= 0:
            raise ContractViolation("raw_exp_integral needs a > 0 and b > 0")
        u_lo, u_hi = _saddles(a, b, c)
        y_peak = mpmath.log(u_hi)
        f_peak = _exponent(a, b, c, y_peak)
        floor = f_peak - mpmath.log(10) * (spec.digits + spec.tail_drop)
        # right end: descend until below floor
        y_hi = y_peak + 1
        while _exponent(a, b, c, y_hi) > floor:
            y_hi += 1
        cut_error = mpmath.mpf(0)
        if c > 0:
            y_lo = mpmath.log(u_lo)
            f_lo = _exponent(a, b, c, y_lo)
            # curvature at the dip bounds the neglected lobe width
            curv = abs(-b * u_lo + c / u_lo)
            width = 1 / mpmath.sqrt(curv) if curv > 0 else mpmath.mpf(1)
            cut_error = mpmath.exp(f_lo - f_peak) * (width + 1)
            if f_lo > floor:
                # dip too shallow for the requested precision
                cut_error = mpmath.exp(f_lo - f_peak)
        else:
            y_lo = y_peak - 1
            while _exponent(a, b, c, y_lo) > floor:
                y_lo -= 1

        def integrand(y):
            return mpmath.exp(_exponent(a, b, c, y) - f_peak)

        val, err = mpmath.quad(integrand, [y_lo, y_peak, y_hi], error=True)
        scale = mpmath.exp(f_peak)
        return IntegralResult(val * scale, err * scale, cut_error * scale)


def raw_exp_integral_logform(a, b, c, spec: QuadratureSpec) -> IntegralResult:
    """Same integral through x = e^y: x^(a-1) e^(-b x + c/x) on (0, inf).

    The domain is truncated at the images of the y-form cuts, so the two
    routes evaluate the same truncated integral (their agreement
    certifies the change of variables and the quadrature, not the cuts).
    """
    with mp.workdps(spec.dps):
        a = mpmath.mpf(str(as_rat(a))) if not isinstance(a, mpmath.mpf) else a
        b = mpmath.mpf(str(as_rat(b))) if not isinstance(b, mpmath.mpf) else b
        c = mpmath.mpf(str(as_rat(c))) if not isinstance(c, mpmath.mpf) else c
        u_lo, u_hi = _saddles(a, b, c)
        y_peak = mpmath.log(u_hi)
        f_peak = _exponent(a, b, c, y_peak)
        floor = f_peak - mpmath.log(10) * (spec.digits + spec.tail_drop)
        y_hi = y_peak + 1
        while _exponent(a, b, c, y_hi) > floor:
            y_hi += 1
        if c > 0:
            y_lo = mpmath.log(u_lo)
        else:
            y_lo = y_peak - 1
            while _exponent(a, b, c, y_lo) > floor:
                y_lo -= 1
        x_lo, x_hi, x_peak = (mpmath.exp(y_lo), mpmath.exp(y_hi),
                              mpmath.exp(y_peak))

        def integrand(x):
            return mpmath.exp((a - 1) * mpmath.log(x) - b * x + c / x - f_peak)

        val, err = mpmath.quad(integrand, [x_lo, x_peak, x_hi], error=True)
        scale = mpmath.exp(f_peak)
        return IntegralResult(val * scale, err * scale, mpmath.mpf(0))


def _phi_prefactor(n, z, spec):
    with mp.workdps(spec.dps):
        nv = mpmath.mpf(str(as_rat(n)))
        zv = mpmath.mpf(str(as_rat(z)))
        return mpmath.exp((nv - zv) * mpmath.log(zv) + zv) \
            / mpmath.sqrt(2 * mpmath.pi)


def numeric_phi(k: int, n, qt, z, spec: QuadratureSpec = QuadratureSpec(),
                form: str = "shifted") -> IntegralResult:
    """Basis-vector value by quadrature.

    form="shifted" uses the real-line variable, form="log" the positive
    half-line; both truncate identically and must agree to quadrature
    precision.
    """
    a = as_rat(z) + k - as_rat(n) - Q(1, 2)
    if form == "shifted":
        raw = raw_exp_integral(a, 1, qt, spec)
    elif form == "log":
        raw = raw_exp_integral_logform(a, 1, qt, spec)
    else:
        raise ContractViolation(f"unknown integral form {form!r}")
    with mp.workdps(spec.dps):
        pref = _phi_prefactor(n, z, spec)
        return IntegralResult(raw.value * pref, raw.quad_error * pref,
                              raw.cut_error * pref)


def gamma_reference(k: int, n, z, spec: QuadratureSpec = QuadratureSpec()):
    """Gamma(z + k - n - 1/2) / (sqrt(2 pi) z^(z - n) e^-z) via mpmath.gamma."""
    with mp.workdps(spec.dps):
        nv = mpmath.mpf(str(as_rat(n)))
        zv = mpmath.mpf(str(as_rat(z)))
        return mpmath.gamma(zv + k - nv - mpmath.mpf("0.5")) \
            * mpmath.exp((nv - zv) * mpmath.log(zv) + zv) \
            / mpmath.sqrt(2 * mpmath.pi)


def series_phi_value(k: int, n, qt, z, order: int,
                     spec: QuadratureSpec = QuadratureSpec()):
    """Evaluate the truncated basis-vector series at numeric (z, qt)."""
    q_cap = 12
    bv = phi_absolute(k, order, q_cap, charge=as_rat(n))
    with mp.workdps(spec.dps):
        zv = mpmath.mpf(str(as_rat(z)))
        qv = mpmath.mpf(str(as_rat(qt)))
        total = mpmath.mpf(0)
        for e, p in sorted(bv.series.coeffs.items()):
            coeff = mpmath.mpf(0)
            for expo, val in p.terms.items():
                term = mpmath.mpf(str(val))
                d = expo[p.ring.index("qt")]
                if d:
                    term *= qv ** d
                coeff += term
            total += coeff * zv ** e
        return total


def asymptotic_report(k: int, n, qt, z, order: int,
                      spec: QuadratureSpec = QuadratureSpec()) -> AsymptoticReport:
    """Numeric integral vs truncated series, with the modeled tolerance."""
    res = numeric_phi(k, n, qt, z, spec)
    with mp.workdps(spec.dps):
        pred = series_phi_value(k, n, qt, z, order, spec)
        one_more = series_phi_value(k, n, qt, z, order + 1, spec)
        first_omitted = abs(one_more - pred)
        zv = mpmath.mpf(str(as_rat(z)))
        tol = 2 * first_omitted + mpmath.exp(-2 * mpmath.pi * zv) \
            + res.quad_error + res.cut_error
        disc = abs(res.value - pred)
        return AsymptoticReport(res.value, pred, order, disc, tol)


# ---------------------------------------------------------------------------
# eigenvalue integrals
# ---------------------------------------------------------------------------

def eigenvalue_integral(lambdas, n, qt,
                        spec: QuadratureSpec = QuadratureSpec()) -> object:
    """Direct N-fold eigenvalue integral for the Miwa tau, N <= 3.

    (2 pi)^(-N/2) / (Vandermonde(lambda) * P) *
        int prod dy_i Vandermonde(e^y) exp(sum y_i mu_i - e^{y_i} + qt e^{-y_i})

    with mu_i = lambda_i - n + 1/2 and P = exp(-sum (n - lambda_i) log
    lambda_i + lambda_i). Nested quadrature; no determinantal identity is
    used, so the result independently certifies that identity.
    """
    N = len(lambdas)
    if N > 3:
        raise ContractViolation("direct quadrature supports N <= 3")
    lam = [as_rat(v) for v in lambdas]
    if len(set(lam)) != N:
        raise ContractViolation("eigenvalues must be distinct")
    nr = as_rat(n)
    with mp.workdps(spec.dps):
        qv = mpmath.mpf(str(as_rat(qt)))
        mus = [mpmath.mpf(str(v - nr + Q(1, 2))) for v in lam]
        # per-dimension cuts from the extreme exponent channels
        bounds = []
        f_peaks = []
        for mu in mus:
            lo_c, hi_c = mu, mu + (N - 1)
            u_lo, u_hi = _saddles(hi_c, mpmath.mpf(1), qv)
            y_peak = mpmath.log(u_hi)
            f_peak = _exponent(hi_c, 1, qv, y_peak)
            floor = f_peak - mpmath.log(10) * (spec.digits + spec.tail_drop)
            y_hi = y_peak + 1
            while _exponent(hi_c, 1, qv, y_hi) > floor:
                y_hi += 1
            if qv > 0:
                u_lo_small, _ = _saddles(lo_c, mpmath.mpf(1), qv)
                y_lo = mpmath.log(u_lo_small)
            else:
                y_lo = y_peak - 1
                while _exponent(lo_c, 1, qv, y_lo) > floor:
                    y_lo -= 1
            bounds.append((y_lo, y_peak, y_hi))
            f_peaks.append(f_peak)
        shift = sum(f_peaks)

        def vandermonde(vals):
            det = mpmath.mpf(1)
            for i in range(len(vals)):
                for j in range(i + 1, len(vals)):
                    det *= vals[j] - vals[i]
            return det

        def integrand(*ys):
            expo = -shift
            for y, mu in zip(ys, mus):
                expo += y * mu - mpmath.exp(y) + qv * mpmath.exp(-y)
            return vandermonde([mpmath.exp(y) for y in ys]) * mpmath.exp(expo)

        if N == 1:
            val = mpmath.quad(lambda y: integrand(y), list(bounds[0]))
        elif N == 2:
            val = mpmath.quad(
                lambda y1: mpmath.quad(lambda y2: integrand(y1, y2),
                                       list(bounds[1])),
                list(bounds[0]))
        else:
            val = mpmath.quad(
                lambda y1: mpmath.quad(
                    lambda y2: mpmath.quad(
                        lambda y3: integrand(y1, y2, y3), list(bounds[2])),
                    list(bounds[1])),
                list(bounds[0]))
        val *= mpmath.exp(shift)
        lamf = [mpmath.mpf(str(v)) for v in lam]
        nv = mpmath.mpf(str(nr))
        log_p = -sum((nv - lv) * mpmath.log(lv) + lv for lv in lamf)
        norm = (2 * mpmath.pi) ** (mpmath.mpf(N) / 2) * vandermonde(lamf) \
            * mpmath.exp(log_p)
        return val / norm


def determinant_path(lambdas, n, qt,
                     spec: QuadratureSpec = QuadratureSpec()) -> object:
    """Same tau value via the determinant of one-dimensional integrals."""
    N = len(lambdas)
    lam = [as_rat(v) for v in lambdas]
    nr = as_rat(n)
    with mp.workdps(spec.dps):
        mat = []
        for j in range(1, N + 1):
            row = []
            for lv in lam:
                a = lv + j - nr - Q(1, 2)
                row.append(raw_exp_integral(a, 1, qt, spec).value)
            mat.append(row)
        det = mpmath.det(mpmath.matrix(mat))
        lamf = [mpmath.mpf(str(v)) for v in lam]
        nv = mpmath.mpf(str(nr))

        def vandermonde(vals):
            out = mpmath.mpf(1)
            for i in range(len(vals)):
                for j2 in range(i + 1, len(vals)):
                    out *= vals[j2] - vals[i]
            return out

        log_p = -sum((nv - lv) * mpmath.log(lv) + lv for lv in lamf)
        norm = (2 * mpmath.pi) ** (mpmath.mpf(N) / 2) * vandermonde(lamf) \
            * mpmath.exp(log_p)
        return det / norm


# ---------------------------------------------------------------------------
# quantum spectral curve, numeric form
# ---------------------------------------------------------------------------

def numeric_psi(k: int, z, hbar, q, n,
                spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Modified wave function by quadrature:

    hbar^(1/2-k)/sqrt(2 pi) * int exp((y(z + hbar(k-n-1/2)) - e^y + q e^-y)/hbar)
    """
    hv = as_rat(hbar)
    a = (as_rat(z) + hv * (k - as_rat(n) - Q(1, 2))) / hv
    b = Q(1) / hv
    c = as_rat(q) / hv
    raw = raw_exp_integral(a, b, c, spec)
    with mp.workdps(spec.dps):
        pref = mpmath.mpf(str(hv)) ** (mpmath.mpf(1) / 2 - k) \
            / mpmath.sqrt(2 * mpmath.pi)
        return IntegralResult(raw.value * pref, raw.quad_error * pref,
                              raw.cut_error * pref)


def qsc_recursion_residual(k: int, z, hbar, q, n,
                           spec: QuadratureSpec = QuadratureSpec()):
    """Residual of Psi_k(z+h) + q Psi_k(z-h) - (z - h(n+1/2-k)) Psi_k(z).

    Returned relative to |z Psi_k(z)|, with the summed error budget.
    """
    zr, hr, qr, nr = as_rat(z), as_rat(hbar), as_rat(q), as_rat(n)
    up = numeric_psi(k, zr + hr, hr, qr, nr, spec)
    dn = numeric_psi(k, zr - hr, hr, qr, nr, spec)
    mid = numeric_psi(k, zr, hr, qr, nr, spec)
    with mp.workdps(spec.dps):
        coef = mpmath.mpf(str(zr - hr * (nr + Q(1, 2) - k)))
        resid = up.value + mpmath.mpf(str(qr)) * dn.value - coef * mid.value
        scale = abs(coef * mid.value)
        budget = (up.quad_error + up.cut_error
                  + abs(mpmath.mpf(str(qr))) * (dn.quad_error + dn.cut_error)
                  + abs(coef) * (mid.quad_error + mid.cut_error))
        return abs(resid) / scale, budget / scale


# ---------------------------------------------------------------------------
# measure identities
# ---------------------------------------------------------------------------

def measure_jacobian(ys, spec: QuadratureSpec = QuadratureSpec()):
    """Vandermonde(y) Vandermonde(e^y) exp(-(N-1)/2 sum y)."""
    with mp.workdps(spec.dps):
        vals = [mpmath.mpf(str(as_rat(y))) for y in ys]
        N = len(vals)
        out = mpmath.mpf(1)
        for i in range(N):
            for j in range(i + 1, N):
                out *= (vals[j] - vals[i]) \
                    * (mpmath.exp(vals[j]) - mpmath.exp(vals[i]))
        return out * mpmath.exp(-mpmath.mpf(N - 1) / 2 * sum(vals))


def measure_sinh_form(ys, spec: QuadratureSpec = QuadratureSpec()):
    """Vandermonde(y)^2 * prod sinh(d/2)/(d/2) over eigenvalue pairs."""
    with mp.workdps(spec.dps):
        vals = [mpmath.mpf(str(as_rat(y))) for y in ys]
        N = len(vals)
        out = mpmath.mpf(1)
        for i in range(N):
            for j in range(i + 1, N):
                d = vals[j] - vals[i]
                out *= d * d * mpmath.sinh(d / 2) / (d / 2)
        return out


def measure_bernoulli_form_log(ys, terms: int = 40,
                               spec: QuadratureSpec = QuadratureSpec()):
    """log of the double-trace Bernoulli density relative to the flat one:

        sum_{i+j>0} (-1)^j / (2(i+j)) * B_{i+j} / (i! j!) * TrY^i TrY^j

    truncated at total order ``terms``; converges for |y| < 2 pi.
    """
    from .specialfn import bernoulli_number
    with mp.workdps(spec.dps):
        vals = [mpmath.mpf(str(as_rat(y))) for y in ys]
        powers = {m: sum(v ** m for v in vals) for m in range(terms + 1)}
        total = mpmath.mpf(0)
        for i in range(terms + 1):
            for j in range(terms + 1 - i):
                if i + j == 0 or i + j > terms:
                    continue
                bern = bernoulli_number(i + j)
                if not bern:
                    continue
                coeff = mpmath.mpf(str(bern)) * (-1) ** j \
                    / (2 * (i + j) * mpmath.factorial(i)
                       * mpmath.factorial(j))
                total += coeff * powers[i] * powers[j]
        return total


# ---------------------------------------------------------------------------
# steepest-descent expansion
# ---------------------------------------------------------------------------

def saddle_expansion(k: int, n, x, order: int, qt=0):
    """Loop expansion of the wave-function integral around its saddle.

    Returns the list [a_0 = 1, a_1, ..., a_order] in

        Psi ~ h^(1-k) e^{(x log x - x)/h} x^{k-n-1} (a_0 + a_1 h + ...),

    computed from exact Gaussian moments. For qt = 0 the coefficients are
    exact rationals in x and n; they must coincide with the hbar-series
    of the exact basis-vector asymptotics (checked in the tests). Only
    the deformation-free saddle is implemented exactly; a nonzero qt is
    rejected here and validated numerically instead.
    """
    if qt != 0:
        raise ContractViolation(
            "exact saddle expansion implemented for the undeformed case; "
            "use numeric_psi for deformed comparisons")
    xr = as_rat(x)
    kappa = Q(k) - as_rat(n) - Q(1, 2)
    # exponent around y* = log x: -(x/h) sum_{m>=2} d^m/m! + kappa d,
    # represented as (delta_power, h_power) -> coefficient. A product of
    # 2*order cubic vertices still lands at loop order <= order, so delta
    # powers up to 6*order occur.
    max_p = 6 * order + 4

    def mul(t1, t2):
        out = {}
        for (p1, q1), c1 in t1.items():
            for (p2, q2), c2 in t2.items():
                p, qq = p1 + p2, q1 + q2
                if p > max_p:
                    continue
                out[(p, qq)] = out.get((p, qq), Q(0)) + c1 * c2
        return out

    a_poly = {(1, 0): kappa}
    fact = Q(1)
    for m in range(3, max_p + 1):
        fact = Q(1)
        for r in range(2, m + 1):
            fact *= r
        a_poly[(m, -1)] = -xr / fact
    expA = {(0, 0): Q(1)}
    power = {(0, 0): Q(1)}
    r = 0
    while True:
        r += 1
        power = mul(power, a_poly)
        power = {key: c / Q(r) for key, c in power.items()}
        # every extra factor raises the loop order by at least 1/2,
        # so anything already above the target cannot come back
        power = {(p, qq): c for (p, qq), c in power.items()
                 if 2 * qq + p <= 2 * order}
        if not power:
            break
        for key, c in power.items():
            expA[key] = expA.get(key, Q(0)) + c
        if r > 2 * order + 4:
            break
    # Gaussian moments: <d^p> = (h/x)^(p/2) (p-1)!! for even p, else 0
    coeffs = [Q(0)] * (order + 1)
    for (p, qq), c in expA.items():
        if p % 2:
            continue
        half = p // 2
        loop = qq + half
        if loop < 0 or loop > order:
            continue
        dfact = Q(1)
        for r2 in range(p - 1, 0, -2):
            dfact *= r2
        coeffs[loop] += c * dfact / xr ** half
    return coeffs


def saddle_series_reference(k: int, n, x, order: int):
    """hbar-series of the exact basis vector at qt = 0, as the oracle.

    Psi-normalization strips h^(1-k) e^{(x log x - x)/h} x^{k-1-n}; what
    remains is exp(F_{n-k+1}) evaluated at z = x/h, an exact power series
    in h whose coefficients this returns.
    """
    from .specialfn import stirling_exp
    xr = as_rat(x)
    tail = stirling_exp(as_rat(n) - k + 1, order)
    out = [Q(0)] * (order + 1)
    for e, p in tail.coeffs.items():
        j = -e
        if 0 <= j <= order:
            out[j] = p.constant_term() / xr ** j
    return out
