"""The three built-in hidden Markov constructions.

All three processes share the same skeleton: countably many hidden states
grouped into levels, level n holding r(n) equally probable phases, with the
level law P(N = n) = C / (n * log2(n)**alpha) for a tail exponent
alpha in (1, 2].  They differ in r(n), in the transition kernel, and in the
deterministic symbol each state emits:

  hpm1 - r(n) = n; disjoint cycles per level; emits 1 once per period.
  hpm2 - r(n) = s(n), the binary digit count of n; disjoint cycles; emits a
         delimiter 2 followed by the binary digits of n (most significant
         digit replaced by the delimiter).
  hmc  - r(n) = 3*s(n); levels communicate through the end-of-word branch,
         making the chain ergodic; emits delimiter, digits, a run of 3s,
         then the digits again.

Normalization constants are certified interval enclosures; every stationary
or transition probability derived from them carries the enclosure along.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .intervals import Interval
from .series import (
    branch_normalization_sum,
    digit_length,
    level_weight,
    normalization_sum,
    tail_sum_bracket,
)

DEFAULT_SERIES_CUTOFF = 10_000_000


class Kind(str, enum.Enum):
    HPM1 = "hpm1"
    HPM2 = "hpm2"
    HMC = "hmc"


ALPHABETS: dict[Kind, tuple[int, ...]] = {
    Kind.HPM1: (0, 1),
    Kind.HPM2: (0, 1, 2),
    Kind.HMC: (0, 1, 2, 3),
}


def binary_length(n: int) -> int:
    """s(n): the number of binary digits of n >= 1."""
    if n < 1:
        raise ValueError(f"binary_length requires n >= 1, got {n}")
    return digit_length(n)


def binary_digit(n: int, k: int) -> int:
    """b(n, k): the k-th binary digit of n, most significant first (b(n,1)=1)."""
    s = binary_length(n)
    if not 1 <= k <= s:
        raise ValueError(f"digit index {k} out of range 1..{s} for n={n}")
    return (n >> (s - k)) & 1


def phase_count(kind: Kind, level: int) -> int:
    """r(n): phases per level; n (hpm1), s(n) (hpm2), 3*s(n) (hmc)."""
    if level < 2:
        raise ValueError(f"levels start at 2, got {level}")
    if kind is Kind.HPM1:
        return level
    if kind is Kind.HPM2:
        return binary_length(level)
    return 3 * binary_length(level)


@dataclass(frozen=True)
class StateId:
    """Hidden state: (level, phase) with 1 <= phase <= r(level)."""

    level: int
    phase: int


@dataclass(frozen=True)
class TransitionLaw:
    """Outgoing law of one state: explicit successors plus unresolved tail mass.

    For the cyclic kinds the single successor has probability exactly 1 and
    the tail is the zero interval.  For the ergodic kind's branch states the
    successors enumerate levels up to a cutoff and `tail_mass` encloses the
    probability of branching beyond it; it is reported rather than
    renormalized away so that enumeration can keep its error certificate.
    """

    moves: tuple[tuple[StateId, Interval], ...]
    tail_mass: Interval


class ProcessModel:
    """One of the three constructions, with certified normalization constants.

    `fixed_level` collapses the level mixture to a point mass on one level;
    this degenerate configuration exists for diagnostics and tests (the
    kernel and emission map are unchanged, only the level law is).
    """

    def __init__(
        self,
        kind: Kind | str,
        alpha: float = 2.0,
        series_cutoff: int = DEFAULT_SERIES_CUTOFF,
        fixed_level: int | None = None,
    ) -> None:
        self.kind = Kind(kind)
        if not 1.0 < alpha <= 2.0:
            raise ValueError(f"tail exponent must lie in (1, 2], got {alpha}")
        if series_cutoff < 100:
            raise ValueError(f"series cutoff unreasonably small: {series_cutoff}")
        if fixed_level is not None and fixed_level < 2:
            raise ValueError(f"levels start at 2, got fixed_level={fixed_level}")
        self.alpha = float(alpha)
        self.series_cutoff = int(series_cutoff)
        self.fixed_level = fixed_level
        self._word_cache: dict[int, bytes] = {}

    def __repr__(self) -> str:
        extra = f", fixed_level={self.fixed_level}" if self.fixed_level else ""
        return f"ProcessModel({self.kind.value!r}, alpha={self.alpha}{extra})"

    @property
    def alphabet(self) -> tuple[int, ...]:
        return ALPHABETS[self.kind]

    @property
    def norm_c(self) -> Interval:
        """Enclosure of C with C**-1 = sum_{n>=2} 1/(n*log2(n)**alpha)."""
        return normalization_sum(self.alpha, self.series_cutoff).reciprocal()

    @property
    def norm_d(self) -> Interval:
        """Enclosure of the branch constant D (hmc only)."""
        if self.kind is not Kind.HMC:
            raise ValueError("branch constant is defined for the ergodic kind only")
        return branch_normalization_sum(self.alpha, self.series_cutoff).reciprocal()

    def phase_count(self, level: int) -> int:
        return phase_count(self.kind, level)

    def validate_state(self, state: StateId) -> None:
        r = self.phase_count(state.level)
        if not 1 <= state.phase <= r:
            raise ValueError(
                f"phase {state.phase} out of range 1..{r} for level {state.level} ({self.kind.value})"
            )

    # ----- stationary law ---------------------------------------------------

    def level_mass(self, level: int) -> Interval:
        """Enclosure of P(N = level)."""
        if level < 2:
            raise ValueError(f"levels start at 2, got {level}")
        if self.fixed_level is not None:
            return Interval.point(1.0 if level == self.fixed_level else 0.0)
        return self.norm_c * Interval.point(level_weight(level, self.alpha))

    def level_tail_mass(self, level_cutoff: int) -> Interval:
        """Enclosure of P(N > level_cutoff)."""
        if self.fixed_level is not None:
            return Interval.point(1.0 if self.fixed_level > level_cutoff else 0.0)
        tail = tail_sum_bracket(self.alpha, level_cutoff + 1)
        return (self.norm_c * tail.interval).clamp(0.0, 1.0)

    def stationary_probability(self, state: StateId) -> Interval:
        """Enclosure of the stationary mass of one hidden state (uniform phases)."""
        self.validate_state(state)
        return self.level_mass(state.level) * Interval.point(1.0 / self.phase_count(state.level))

    # ----- kernel -----------------------------------------------------------

    def branch_probability(self, level: int) -> Interval:
        """Enclosure of the post-word branch probability p(level) (hmc only)."""
        if level < 2:
            raise ValueError(f"levels start at 2, got {level}")
        w = level_weight(level, self.alpha) / self.phase_count(level)
        return self.norm_d * Interval.point(w)

    def branch_tail_mass(self, level_cutoff: int) -> Interval:
        """Enclosure of the branch mass beyond level_cutoff: 1 - sum_{n<=cutoff} p(n)."""
        total = math.fsum(
            level_weight(n, self.alpha) / self.phase_count(n) for n in range(2, level_cutoff + 1)
        )
        return (1.0 - self.norm_d * Interval.point(total)).clamp(0.0, 1.0)

    def transition_distribution(self, state: StateId, level_cutoff: int | None = None) -> TransitionLaw:
        """Outgoing transition law of `state`.

        Cyclic kinds return the single deterministic successor.  The ergodic
        kind's end-of-word states branch over levels up to `level_cutoff`
        (required there), with the remaining branch mass in `tail_mass`.
        """
        self.validate_state(state)
        r = self.phase_count(state.level)
        one = Interval.point(1.0)
        zero = Interval.point(0.0)
        if state.phase < r:
            return TransitionLaw(((StateId(state.level, state.phase + 1), one),), zero)
        if self.kind is not Kind.HMC:
            return TransitionLaw(((StateId(state.level, 1), one),), zero)
        if self.fixed_level is not None:
            return TransitionLaw(((StateId(self.fixed_level, 1), one),), zero)
        if level_cutoff is None:
            raise ValueError("branch states need a level cutoff to enumerate successors")
        moves = tuple(
            (StateId(n, 1), self.branch_probability(n)) for n in range(2, level_cutoff + 1)
        )
        return TransitionLaw(moves, self.branch_tail_mass(level_cutoff))

    # ----- emission ---------------------------------------------------------

    def emission(self, state: StateId) -> int:
        """The deterministic observable symbol of one hidden state."""
        self.validate_state(state)
        m, k = state.level, state.phase
        if self.kind is Kind.HPM1:
            return 1 if k == m else 0
        s = binary_length(m)
        if self.kind is Kind.HPM2:
            return 2 if k == 1 else binary_digit(m, k)
        # hmc: delimiter, digits 2..s, run of s+1 threes, digits 2..s again
        if k == 1:
            return 2
        if k <= s:
            return binary_digit(m, k)
        if k <= 2 * s + 1:
            return 3
        return binary_digit(m, k - 2 * s)

    def emission_word(self, level: int) -> bytes:
        """One full cycle of emissions, phases 1..r(level), as bytes."""
        word = self._word_cache.get(level)
        if word is not None:
            return word
        r = self.phase_count(level)
        word = bytes(self.emission(StateId(level, k)) for k in range(1, r + 1))
        if len(self._word_cache) < 65536:
            self._word_cache[level] = word
        return word
