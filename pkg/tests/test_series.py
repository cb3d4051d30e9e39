"""Brackets and certified series sums against direct-summation oracles."""

import math

import numpy as np
import pytest

from excesslab.series import (
    branch_normalization_sum,
    level_weight,
    level_weight_sums,
    normalization_sum,
    partial_sum_bracket,
    squared_level_tail,
    tail_sum_bracket,
)

ALPHAS = (1.2, 1.5, 1.8, 2.0)
POINTS = (2, 2**4, 2**10, 2**16, 2**20)


def direct_partial(alpha: float, n: int) -> float:
    m = np.arange(2, n + 1, dtype=np.float64)
    return float(np.sum(1.0 / (m * np.log2(m) ** (alpha - 1.0))))


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("n", POINTS)
def test_partial_bracket_contains_direct_sum(alpha, n):
    br = partial_sum_bracket(alpha, n)
    value = direct_partial(alpha, n)
    assert br.lower - 1e-12 <= value <= br.upper + 1e-12


def test_partial_bracket_width_is_always_half():
    for alpha in ALPHAS:
        for n in POINTS:
            br = partial_sum_bracket(alpha, n)
            assert br.width == pytest.approx(0.5)
            assert br.slack == 0.5


def test_partial_bracket_alpha2_n2_endpoints():
    br = partial_sum_bracket(2.0, 2)
    assert br.lower == pytest.approx(0.0, abs=1e-15)
    assert br.upper == pytest.approx(0.5)
    # the actual single-term sum is 1/2, on the bracket boundary
    assert br.lower <= 0.5 <= br.upper


def test_tail_bracket_alpha2_n2_closed_form():
    br = tail_sum_bracket(2.0, 2)
    assert br.lower == pytest.approx(math.log(2.0))
    assert br.slack == pytest.approx(0.5)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_tail_bracket_against_high_cutoff_summation(alpha):
    # Direct summation to 1e7 plus a recursive tail bracket encloses the
    # true tail; this enclosure must intersect the closed-form bracket and
    # the closed-form bracket must contain the midpoint estimate.
    n = 16
    top = 10**7
    m = np.arange(n, top, dtype=np.float64)
    direct = float(np.sum(1.0 / (m * np.log2(m) ** alpha)))
    rec = tail_sum_bracket(alpha, top)
    oracle_lo = direct + rec.lower
    oracle_hi = direct + rec.upper
    br = tail_sum_bracket(alpha, n)
    assert br.lower <= oracle_hi and oracle_lo <= br.upper
    assert br.lower - 1e-12 <= 0.5 * (oracle_lo + oracle_hi) <= br.upper + 1e-12


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("n", (2, 16, 1024))
def test_tail_bracket_telescoping(alpha, n):
    seg = np.arange(n, 2 * n, dtype=np.float64)
    direct = float(np.sum(1.0 / (seg * np.log2(seg) ** alpha)))
    lo = tail_sum_bracket(alpha, n).lower - tail_sum_bracket(alpha, 2 * n).upper
    hi = tail_sum_bracket(alpha, n).upper - tail_sum_bracket(alpha, 2 * n).lower
    assert lo - 1e-12 <= direct <= hi + 1e-12


def test_tail_bracket_width_is_first_term():
    for alpha in ALPHAS:
        br = tail_sum_bracket(alpha, 100)
        assert br.width == pytest.approx(level_weight(100, alpha))


def test_alpha_validation():
    with pytest.raises(ValueError):
        partial_sum_bracket(1.0, 10)
    with pytest.raises(ValueError):
        tail_sum_bracket(2.5, 10)
    with pytest.raises(ValueError):
        partial_sum_bracket(1.5, 1)


def test_level_weight_term_ratio():
    # C-free ratio of the alpha=2 weights at n=2 vs n=4.
    assert level_weight(2, 2.0) / level_weight(4, 2.0) == pytest.approx(8.0)


def test_normalization_width_alpha2_against_high_cutoff_oracle():
    # Oracle: direct summation to 1e8 plus the closed-form tail bracket.
    chunks = []
    top = 10**8
    step = 1 << 22
    for lo in range(2, top + 1, step):
        m = np.arange(lo, min(lo + step, top + 1), dtype=np.float64)
        chunks.append(float(np.sum(1.0 / (m * np.log2(m) ** 2.0))))
    direct = math.fsum(chunks)
    tail = tail_sum_bracket(2.0, top + 1)
    oracle = (direct + tail.lower, direct + tail.upper)

    c = normalization_sum(2.0, 10**7).reciprocal()
    assert c.width <= 1e-6
    # both enclose the same constant
    oracle_c = (1.0 / oracle[1], 1.0 / oracle[0])
    assert c.lo - 1e-15 <= oracle_c[1] and oracle_c[0] <= c.hi + 1e-15


def test_normalization_width_alpha15():
    c = normalization_sum(1.5, 10**7).reciprocal()
    assert c.width <= 1e-4


def test_branch_normalization_contains_direct_refinement():
    # A much larger direct cutoff must give a sub-enclosure of the smaller one.
    coarse = branch_normalization_sum(1.5, 10**4)
    fine = branch_normalization_sum(1.5, 10**6)
    assert coarse.lo - 1e-12 <= fine.mid <= coarse.hi + 1e-12
    assert fine.width < coarse.width


@pytest.mark.parametrize("alpha", (1.5, 2.0))
def test_level_weight_sums_match_direct_summation(alpha):
    top = (1 << 24) - 1
    sums = level_weight_sums(alpha, top)  # groups beyond 2^22 bracketed
    m = np.arange(2, top + 1, dtype=np.float64)
    logm = np.log2(m)
    w = 1.0 / (m * logm**alpha)
    s = np.frexp(m)[1].astype(np.float64)
    direct = {
        "s0": float(np.sum(w)),
        "s1": float(np.sum(w * logm)),
        "s2": float(np.sum(w * np.where(m == 2, 0.0, np.log2(np.maximum(logm, 1e-300))))),
        "s_digit": float(np.sum(w * np.log2(s))),
        "s_inv_digit": float(np.sum(w / s)),
    }
    for name, value in direct.items():
        iv = getattr(sums, name)
        assert iv.lo - 1e-10 <= value <= iv.hi + 1e-10, f"{name}: {value} not in {iv}"


@pytest.mark.parametrize("alpha", (1.5, 2.0))
def test_squared_level_tail_against_direct_summation(alpha):
    a = 50
    m = np.arange(a, 10**7, dtype=np.float64)
    direct = float(np.sum(1.0 / (m * m * np.log2(m) ** alpha)))
    iv = squared_level_tail(alpha, a)
    # the directly summed part misses only ~1e-8 relative tail mass
    assert iv.lo - 1e-12 <= direct <= iv.hi + 1e-12
