"""Integral brackets for the slowly convergent level-weight series.

The stationary level law puts weight w(m) = 1/(m * log2(m)**alpha) on level
m >= 2, with alpha in (1, 2].  Everything downstream needs partial and tail
sums of w(m), and of w(m) multiplied by slowly varying factors (log2 m,
log2 log2 m, digit-count terms).  For a positive decreasing f,

    integral_a^{b+1} f  <=  sum_{m=a}^{b} f(m)  <=  f(a) + integral_a^b f,

and the integrals have closed forms after substituting p = log2 m.  That
turns every needed sum into a certified two-sided enclosure: direct
summation up to a configurable cutoff, per-digit-group brackets beyond it,
so cutoffs as large as 2**n for block length n stay cheap.

All logarithms are base 2; entropies derived from these sums are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .intervals import Interval

LN2 = math.log(2.0)

# Direct summation boundary for the group-bracketed sums: full digit groups
# up to this many binary digits are summed term by term.
_DIRECT_DIGITS = 22

# Chunk size for vectorised series summation.
_CHUNK = 1 << 20


def digit_length(m: int) -> int:
    """Number of binary digits of m >= 1 (floor(log2 m) + 1)."""
    if m < 1:
        raise ValueError(f"digit_length requires m >= 1, got {m}")
    return m.bit_length()


def level_weight(m: int, alpha: float) -> float:
    """w(m) = 1 / (m * log2(m)**alpha) for a single level m >= 2."""
    return 1.0 / (m * math.log2(m) ** alpha)


@dataclass(frozen=True)
class SeriesBracket:
    """A certified enclosure [lower, upper] with the slack term that widened it."""

    lower: float
    upper: float
    slack: float

    @property
    def interval(self) -> Interval:
        return Interval(self.lower, self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def partial_sum_bracket(alpha: float, n: int) -> SeriesBracket:
    """Enclosure of sum_{m=2}^{n} 1/(m * log2(m)**(alpha-1)).

    The closed-form integral is (ln2/(2-alpha)) * (log2(n)**(2-alpha) - 1)
    for alpha < 2 and (ln2)**2 * log2(log2(n)) at alpha = 2; the first term
    of the sum, 1/2 regardless of alpha, is the bracket width.
    """
    _check_alpha(alpha)
    if n < 2:
        raise ValueError(f"partial sum starts at m=2, got n={n}")
    integral = _integral_pow(alpha - 1.0, 1.0, _log2_int(n))
    return SeriesBracket(integral, integral + 0.5, 0.5)


def tail_sum_bracket(alpha: float, n: int) -> SeriesBracket:
    """Enclosure of sum_{m=n}^{infinity} 1/(m * log2(m)**alpha).

    Closed form ln2/(alpha-1) * log2(n)**(1-alpha) plus a slack of at most
    the first term 1/(n * log2(n)**alpha).
    """
    _check_alpha(alpha)
    if n < 2:
        raise ValueError(f"tail sum starts at m >= 2, got n={n}")
    integral = _integral_pow(alpha, _log2_int(n), None)
    first = 1.0 / (n * _log2_int(n) ** alpha) if n.bit_length() <= 1020 else 0.0
    return SeriesBracket(integral, integral + first, first)


def squared_level_tail(alpha: float, a: int, direct_limit: int = 1 << 18) -> Interval:
    """Enclosure of sum_{m=a}^{infinity} 1/(m**2 * log2(m)**alpha).

    Converges fast (1/m**2); summed directly to `direct_limit`, then bracketed
    using log2(m) >= log2(b) below and log2(m) <= 2*log2(b) on [b, b**2] above.
    """
    _check_alpha(alpha)
    if a < 2:
        raise ValueError(f"squared tail starts at m >= 2, got a={a}")
    b = max(a, direct_limit)
    direct = 0.0
    if a < b:
        parts = []
        for lo in range(a, b, _CHUNK):
            m = np.arange(lo, min(lo + _CHUNK, b), dtype=np.float64)
            parts.append(float(np.sum(1.0 / (m * m * np.log2(m) ** alpha))))
        direct = math.fsum(parts)
    lb = _log2_int(b)
    f_b = 1.0 / (b * b * lb**alpha)
    int_hi = 1.0 / (b * lb**alpha)
    int_lo = (1.0 / b - 1.0 / (b * b)) / (2.0 * lb) ** alpha
    return Interval(direct + int_lo, direct + int_hi + f_b)


@dataclass(frozen=True)
class LevelSums:
    """Enclosures of sum_{m=2}^{m_max} w(m) * factor(m) for the factors we need.

    s0:         factor 1
    s1:         factor log2(m)
    s2:         factor log2(log2(m))   (0 at m = 2)
    s_digit:    factor log2(s(m)), s(m) the binary digit count
    s_inv_digit: factor 1/s(m)
    """

    s0: Interval
    s1: Interval
    s2: Interval
    s_digit: Interval
    s_inv_digit: Interval


def level_weight_sums(alpha: float, m_max: int, direct_digits: int = _DIRECT_DIGITS) -> LevelSums:
    """Certified enclosures of the weighted level sums up to m_max (inclusive).

    m_max may be astronomically large (it is an int, e.g. 2**n); only
    min(m_max, 2**direct_digits - 1) terms are summed directly and the rest is
    bracketed one binary-digit group at a time.
    """
    _check_alpha(alpha)
    if m_max < 2:
        raise ValueError(f"level sums start at m=2, got m_max={m_max}")

    direct_top = min(m_max, (1 << direct_digits) - 1)
    acc = {k: [] for k in ("s0", "s1", "s2", "sd", "sid")}
    for lo in range(2, direct_top + 1, _CHUNK):
        m = np.arange(lo, min(lo + _CHUNK, direct_top + 1), dtype=np.int64)
        mf = m.astype(np.float64)
        logm = np.log2(mf)
        w = 1.0 / (mf * logm**alpha)
        s = np.frexp(mf)[1].astype(np.float64)  # binary digit count, exact
        acc["s0"].append(float(np.sum(w)))
        acc["s1"].append(float(np.sum(w * logm)))
        with np.errstate(divide="ignore"):
            ll = np.where(m == 2, 0.0, np.log2(logm))
        acc["s2"].append(float(np.sum(w * ll)))
        acc["sd"].append(float(np.sum(w * np.log2(s))))
        acc["sid"].append(float(np.sum(w / s)))
    vals = {k: math.fsum(v) for k, v in acc.items()}
    sums = {
        "s0": Interval.point(vals["s0"]),
        "s1": Interval.point(vals["s1"]),
        "s2": Interval.point(vals["s2"]),
        "sd": Interval.point(vals["sd"]),
        "sid": Interval.point(vals["sid"]),
    }

    if m_max > direct_top:
        top_digits = digit_length(m_max)
        for j in range(direct_digits + 1, top_digits + 1):
            a = 1 << (j - 1)
            b = min((1 << j) - 1, m_max)
            g0 = _group_sum(alpha, a, b)
            g1 = _group_sum(alpha - 1.0, a, b)
            sums["s0"] = sums["s0"] + g0
            sums["s1"] = sums["s1"] + g1
            sums["s2"] = sums["s2"] + g0 * Interval(math.log2(j - 1), math.log2(j))
            sums["sd"] = sums["sd"] + g0 * Interval.point(math.log2(j))
            sums["sid"] = sums["sid"] + g0 * Interval.point(1.0 / j)

    return LevelSums(sums["s0"], sums["s1"], sums["s2"], sums["sd"], sums["sid"])


@lru_cache(maxsize=None)
def normalization_sum(alpha: float, cutoff: int) -> Interval:
    """Enclosure of sum_{m=2}^{infinity} w(m): direct to `cutoff`, tail bracketed."""
    _check_alpha(alpha)
    if cutoff < 2:
        raise ValueError(f"series cutoff must be >= 2, got {cutoff}")
    parts = []
    for lo in range(2, cutoff + 1, _CHUNK):
        m = np.arange(lo, min(lo + _CHUNK, cutoff + 1), dtype=np.float64)
        parts.append(float(np.sum(1.0 / (m * np.log2(m) ** alpha))))
    direct = math.fsum(parts)
    tail = tail_sum_bracket(alpha, cutoff + 1)
    return Interval(direct + tail.lower, direct + tail.upper)


@lru_cache(maxsize=None)
def branch_normalization_sum(alpha: float, cutoff: int) -> Interval:
    """Enclosure of sum_{m=2}^{infinity} w(m) / (3*s(m)) (branch weights).

    The 1/s(m) factor makes the tail converge one log-power faster, but it is
    still material: the region beyond the direct cutoff is accumulated one
    digit group at a time before the final remainder bound.
    """
    _check_alpha(alpha)
    if cutoff < 2:
        raise ValueError(f"series cutoff must be >= 2, got {cutoff}")
    parts = []
    for lo in range(2, cutoff + 1, _CHUNK):
        m = np.arange(lo, min(lo + _CHUNK, cutoff + 1), dtype=np.int64)
        mf = m.astype(np.float64)
        s = np.frexp(mf)[1].astype(np.float64)
        parts.append(float(np.sum(1.0 / (3.0 * s * mf * np.log2(mf) ** alpha))))
    total = Interval.point(math.fsum(parts))

    # Partial digit group containing cutoff+1, then ~2e4 whole groups.
    j0 = digit_length(cutoff + 1)
    first = _group_sum(alpha, cutoff + 1, (1 << j0) - 1) if cutoff + 1 <= (1 << j0) - 1 else Interval.point(0.0)
    total = total + first * Interval.point(1.0 / (3.0 * j0))
    j_top = j0 + 20000
    js = np.arange(j0 + 1, j_top + 1, dtype=np.float64)
    ints = _group_integrals(alpha, js)
    lows = ints / (3.0 * js)
    highs = (ints + np.exp2(-(js - 1.0)) / (js - 1.0) ** alpha) / (3.0 * js)
    total = total + Interval(float(np.sum(lows)), float(np.sum(highs)))
    # Remainder beyond the last group.
    rem_hi = tail_sum_bracket(alpha, 1 << j_top).upper / (3.0 * (j_top + 1))
    return total + Interval(0.0, rem_hi)


def _group_sum(alpha_pow: float, a: int, b: int) -> Interval:
    """Enclosure of sum_{m=a}^{b} 1/(m * log2(m)**alpha_pow) for 2 <= a <= b."""
    la, lb, lb1 = _log2_int(a), _log2_int(b), _log2_int(b + 1)
    lower = _integral_pow(alpha_pow, la, lb1)
    upper = _integral_pow(alpha_pow, la, lb) + 1.0 / (a * la**alpha_pow)
    return Interval(min(lower, upper), max(lower, upper))


def _group_integrals(alpha: float, js: np.ndarray) -> np.ndarray:
    """Vectorised integral of w over whole digit groups [2**(j-1), 2**j)."""
    return LN2 / (alpha - 1.0) * ((js - 1.0) ** (1.0 - alpha) - js ** (1.0 - alpha))


def _integral_pow(beta: float, p_lo: float, p_hi: float | None) -> float:
    """ln2 * integral_{p_lo}^{p_hi} p**(-beta) dp (p_hi=None means infinity)."""
    if p_hi is None:
        if beta <= 1.0:
            raise ValueError("tail integral diverges for exponent <= 1")
        return LN2 / (beta - 1.0) * p_lo ** (1.0 - beta)
    if p_hi < p_lo:
        raise ValueError("integral with reversed endpoints")
    if abs(beta - 1.0) < 1e-12:
        return LN2 * (math.log(p_hi) - math.log(p_lo))
    return LN2 / (1.0 - beta) * (p_hi ** (1.0 - beta) - p_lo ** (1.0 - beta))


def _log2_int(m: int) -> float:
    # math.log2 handles arbitrarily large ints exactly enough for brackets.
    return math.log2(m)


def _check_alpha(alpha: float) -> None:
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"tail exponent must lie in (1, 2], got {alpha}")
