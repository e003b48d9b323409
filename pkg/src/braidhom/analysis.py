"""Hilbert-polynomial fitting, the unlink-pattern detector, and Euler series.

The triply graded table of an m-component closure has rows (i, j) whose
x-graded dimensions eventually agree with a rational polynomial in T of
degree at most m - 1; the total Hilbert polynomial has degree exactly
m - 1, which pins the component count.  The unlink pattern is the specific
table with binomial(m, l) free rows at (m - 2l, -m) shifted up by 2l; the
detector certifies an exact match up to the cutoff or produces a witness
entry.  The graded Euler characteristic of the unnormalized table is a
two-variable Laurent series that an independent skein oracle recomputes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .errors import InvariantViolationError, UsageError
from .pipeline import DimTable


class LaurentSeries:
    """Integer series in a and x, truncated above a fixed x order.

    Exponents of both variables may be negative; coefficients above the x
    truncation are dropped on every operation.
    """

    __slots__ = ("truncation", "coeffs")

    def __init__(self, truncation: int, coeffs: dict | None = None):
        self.truncation = truncation
        self.coeffs = {}
        if coeffs:
            for key, val in coeffs.items():
                if val and key[1] <= truncation:
                    self.coeffs[key] = val

    @classmethod
    def zero(cls, truncation: int) -> "LaurentSeries":
        return cls(truncation)

    @classmethod
    def term(cls, truncation: int, a_exp: int, x_exp: int, coeff: int = 1):
        return cls(truncation, {(a_exp, x_exp): coeff})

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        trunc = min(self.truncation, other.truncation)
        out = dict(self.coeffs)
        for key, val in other.coeffs.items():
            out[key] = out.get(key, 0) + val
        return LaurentSeries(trunc, out)

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries(
            self.truncation, {k: -v for k, v in self.coeffs.items()}
        )

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        trunc = min(self.truncation, other.truncation)
        out: dict = {}
        for (a1, x1), c1 in self.coeffs.items():
            for (a2, x2), c2 in other.coeffs.items():
                if x1 + x2 > trunc:
                    continue
                key = (a1 + a2, x1 + x2)
                out[key] = out.get(key, 0) + c1 * c2
        return LaurentSeries(trunc, out)

    def scale(self, a_exp: int, x_exp: int, coeff: int = 1) -> "LaurentSeries":
        return self * LaurentSeries.term(self.truncation, a_exp, x_exp, coeff)

    def geometric_x2(self) -> "LaurentSeries":
        """Multiply by 1/(1 - x^2) as the geometric series in x^2."""
        acc = LaurentSeries.zero(self.truncation)
        for k in range(0, self.truncation + 1, 2):
            shifted = self.scale(0, k)
            acc = acc + shifted
        return acc

    def x_window(self, low: int, high: int) -> "LaurentSeries":
        kept = {
            k: v for k, v in self.coeffs.items() if low <= k[1] <= high
        }
        return LaurentSeries(self.truncation, kept)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        trunc = min(self.truncation, other.truncation)
        keys = set(self.coeffs) | set(other.coeffs)
        for key in keys:
            if key[1] > trunc:
                continue
            if self.coeffs.get(key, 0) != other.coeffs.get(key, 0):
                return False
        return True

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for (a, x), c in sorted(self.coeffs.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            parts.append(f"{c}*a^{a}*x^{x}")
        return " + ".join(parts)


def unknot_series(truncation: int) -> LaurentSeries:
    """(1 + a^-2 x^2) / (1 - x^2), the series of the one-strand closure."""
    num = LaurentSeries.term(truncation, 0, 0) + LaurentSeries.term(
        truncation, -2, 2
    )
    return num.geometric_x2()


# ---------------------------------------------------------------------------
# Hilbert polynomial fitting
# ---------------------------------------------------------------------------


@dataclass
class HilbertFit:
    """A rational polynomial in T matching a row's dimensions eventually."""

    coefficients: tuple  # Fractions, low degree first
    stable_from: int
    verified_through: int

    @property
    def degree(self) -> int:
        deg = -1
        for k, c in enumerate(self.coefficients):
            if c != 0:
                deg = k
        return deg

    def __call__(self, t: int) -> Fraction:
        acc = Fraction(0)
        power = Fraction(1)
        for c in self.coefficients:
            acc += c * power
            power *= t
        return acc


class FitError(UsageError):
    """Hilbert fitting failed (insufficient or unstable samples)."""


def _lagrange(samples: list[tuple[int, int]]) -> tuple:
    """Coefficients (low first) of the interpolating polynomial."""
    n = len(samples)
    coeffs = [Fraction(0)] * n
    for k, (tk, yk) in enumerate(samples):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for m, (tm, _) in enumerate(samples):
            if m == k:
                continue
            denom *= Fraction(tk - tm)
            new = [Fraction(0)] * (len(basis) + 1)
            for d, c in enumerate(basis):
                new[d] -= c * tm
                new[d + 1] += c
            basis = new
        for d, c in enumerate(basis):
            coeffs[d] += c * yk / denom
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def hilbert_fit(dims: dict[int, int], m_bound: int) -> HilbertFit:
    """Fit a degree-< m_bound polynomial to the tail of T -> dims[T].

    The last ``m_bound`` samples determine the polynomial by interpolation;
    it must then also match at least three additional trailing samples.
    """
    if m_bound < 1:
        raise FitError("m_bound must be positive")
    if not dims:
        raise FitError("no samples")
    t_max = max(dims)
    needed = m_bound + 3
    if t_max + 1 < needed:
        raise FitError(
            f"need samples through T >= {needed - 1}, have T <= {t_max}"
        )
    window = [(t, dims.get(t, 0)) for t in range(t_max - m_bound + 1, t_max + 1)]
    coeffs = _lagrange(window)
    if len(coeffs) > m_bound:
        raise FitError("interpolation degree exceeded the bound")
    fit = HilbertFit(coeffs, stable_from=t_max - m_bound + 1, verified_through=t_max)
    # walk back until the polynomial stops matching
    t_floor = min(dims)
    stable_from = t_max - m_bound + 1
    t = stable_from - 1
    while t >= t_floor and fit(t) == dims.get(t, 0):
        stable_from = t
        t -= 1
    verified = (t_max - m_bound + 1) - stable_from
    if verified < 3:
        raise FitError(
            f"fit verified on only {verified} trailing samples (need >= 3)"
        )
    return HilbertFit(coeffs, stable_from=stable_from, verified_through=t_max)


def row_dims(table: DimTable, i: int, j: int, t_min: int = 0) -> dict[int, int]:
    out = {}
    for (ti, tj, x), dim in table.entries.items():
        if (ti, tj) == (i, j):
            out[x // 2] = dim
    if out:
        lo = min(min(out), t_min)
        for t in range(lo, max(out) + 1):
            out.setdefault(t, 0)
    return out


def table_rows(table: DimTable) -> list[tuple[int, int]]:
    return sorted({(i, j) for (i, j, _) in table.entries})


def hilbert_P_B(table: DimTable, m_bound: int, expected_components: int | None = None):
    """Total Hilbert polynomial of a triply graded table and the inferred count.

    Fits every nonzero (i, j) row, sums the fits, and reads the component
    count off as degree + 1.  When the permutation cycle count is supplied
    the inference is cross-checked against it.
    """
    fits: dict = {}
    total = [Fraction(0)] * m_bound
    for (i, j) in table_rows(table):
        fit = hilbert_fit(row_dims(table, i, j), m_bound)
        fits[(i, j)] = fit
        for d, c in enumerate(fit.coefficients):
            total[d] += c
    while len(total) > 1 and total[-1] == 0:
        total.pop()
    degree = -1
    for d, c in enumerate(total):
        if c != 0:
            degree = d
    inferred = degree + 1
    if expected_components is not None and inferred != expected_components:
        raise InvariantViolationError(
            f"Hilbert degree infers {inferred} components,"
            f" permutation cycle count gives {expected_components}"
        )
    return tuple(total), inferred, fits


# ---------------------------------------------------------------------------
# Unlink pattern detection
# ---------------------------------------------------------------------------


@dataclass
class DetectionReport:
    verdict: str  # "unlink_consistent" | "not_unlink" | "inconclusive"
    m: int
    witness: dict | None
    cutoff: int

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "components": self.m,
            "witness": self.witness,
            "cutoff": self.cutoff,
        }


def unlink_pattern_dim(m: int, i: int, j: int, two_t: int) -> int:
    """Expected dimension of the m-component unlink table at (i, j, 2T)."""
    if j != -m:
        return 0
    if (m - i) % 2:
        return 0
    l = (m - i) // 2
    if l < 0 or l > m:
        return 0
    t = two_t // 2
    if t < l:
        return 0
    return comb(m, l) * comb(t - l + m - 1, m - 1)


def detect_unlink(table: DimTable, m: int, cutoff: int) -> DetectionReport:
    """Compare a normalized table against the m-unlink pattern up to cutoff.

    ``unlink_consistent`` means every entry with 2T <= 2*cutoff matches the
    pattern exactly and every nonzero row admits a stabilized Hilbert fit;
    the verdict is explicitly "consistent up to the cutoff".  A mismatch is
    reported with its witness entry and never reverts at larger cutoffs.
    """
    if m <= 0:
        raise UsageError("component count must be positive")
    two_t_max = 2 * cutoff
    keys = set(k for k in table.entries if k[2] <= two_t_max)
    for i in range(-m, m + 1):
        for t in range(cutoff + 1):
            keys.add((i, -m, 2 * t))
    # scan in x-degree order so a witness found at one cutoff is found
    # again, unchanged, at every larger cutoff
    for key in sorted(keys, key=lambda k: (k[2], k[0], k[1])):
        i, j, two_t = key
        got = table.get(key)
        expected = unlink_pattern_dim(m, i, j, two_t)
        if got != expected:
            return DetectionReport(
                verdict="not_unlink",
                m=m,
                witness={
                    "i": i,
                    "j": j,
                    "x": two_t,
                    "dim": got,
                    "expected": expected,
                },
                cutoff=cutoff,
            )
    try:
        hilbert_P_B(table, m)
    except FitError:
        return DetectionReport("inconclusive", m, None, cutoff)
    return DetectionReport("unlink_consistent", m, None, cutoff)


# ---------------------------------------------------------------------------
# Euler characteristic and the Hilbert skein cross-check
# ---------------------------------------------------------------------------


def euler_series(hat_table: DimTable, cutoff: int) -> LaurentSeries:
    """Alternating generating series of the unnormalized table.

    Signs come from half the vertical grading, which is even on the
    unnormalized table; an odd vertical grading is a convention breach.
    """
    out = LaurentSeries.zero(cutoff)
    for (i, j, two_t), dim in hat_table.entries.items():
        if two_t > cutoff:
            continue
        if j % 2:
            raise InvariantViolationError(
                f"odd vertical grading {j} in the unnormalized table"
            )
        sign = -1 if (j // 2) % 2 else 1
        out = out + LaurentSeries.term(cutoff, i, two_t, sign * dim)
    return out


def qhat_polynomial(hat_table: DimTable, m_bound: int) -> dict:
    """Signed Hilbert polynomials of an unnormalized table, keyed by a-power.

    Returns {a_exponent: tuple of Fractions (low degree first)} collecting
    (-1)^(j/2) * fit(i, j) over the table rows.
    """
    out: dict = {}
    for (i, j) in table_rows(hat_table):
        if j % 2:
            raise InvariantViolationError("odd vertical grading in hat table")
        fit = hilbert_fit(row_dims(hat_table, i, j), m_bound)
        sign = -1 if (j // 2) % 2 else 1
        acc = out.setdefault(i, [Fraction(0)] * m_bound)
        for d, c in enumerate(fit.coefficients):
            acc[d] += sign * c
    return {
        a: tuple(coeffs)
        for a, coeffs in out.items()
        if any(c != 0 for c in coeffs)
    }


def _poly_shift(coeffs: tuple, shift: int) -> tuple:
    """Coefficients of p(T + shift) given those of p(T)."""
    n = len(coeffs)
    out = [Fraction(0)] * n
    for d, c in enumerate(coeffs):
        # expand c * (T + shift)^d
        for k in range(d + 1):
            out[k] += c * comb(d, k) * (Fraction(shift) ** (d - k))
    return tuple(out)


def qhat_skein_check(q_plus: dict, q_minus: dict, q_zero: dict) -> dict:
    """Residual of the skein identity on signed Hilbert polynomials.

    Computes  a^-2 Q+(a, T) - a^2 Q-(a, T+1) - Q0(a, T+1) + Q0(a, T)
    and returns the nonzero residual coefficients keyed (a_exp, T_degree);
    an empty dict is a pass.
    """
    residual: dict = {}

    def add(table: dict, a_shift: int, t_shift: int, sign: int):
        for a, coeffs in table.items():
            shifted = _poly_shift(coeffs, t_shift) if t_shift else coeffs
            for d, c in enumerate(shifted):
                key = (a + a_shift, d)
                residual[key] = residual.get(key, Fraction(0)) + sign * c

    add(q_plus, -2, 0, +1)
    add(q_minus, +2, 1, -1)
    add(q_zero, 0, 1, -1)
    add(q_zero, 0, 0, +1)
    return {k: v for k, v in residual.items() if v != 0}
