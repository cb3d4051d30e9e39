"""Exact joint block distributions and certified information quantities.

`enumerate_joint` materialises the joint law of (past block, future block) of
length n each as a finite table:

  * the two cyclic kinds are mixtures of deterministic cycles, so each
    (level, phase) pair contributes its stationary mass to exactly one
    (past, future) key;
  * the ergodic kind is enumerated over hidden paths of length 2n that branch
    at word boundaries, with optional probability pruning and a best-first
    expansion order so a fixed path budget drops the least possible mass.

Every table tracks the probability mass that was *not* assigned to a key
(`pruned_mass`, an interval upper-bounding level tails plus pruned paths) and
`entry_slack`, a bound on the total absolute error of the assigned masses
coming from the normalization-constant enclosures.  Entropy results convert
these into certified error bars via

  |H_true - H_table|  <=  delta * log2(support) + h(delta) + slope * slack,

with h the binary entropy function and slope the worst Lipschitz constant of
-p*log2(p) above the smallest retained mass.  Masses below 1e-30 are folded
into the pruned mass before any entropy is taken.  Mass reductions use exact
compensated summation (math.fsum); entropy reductions use numpy's pairwise
summation, whose rounding is far below every certified width.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Callable, Iterable

import numpy as np

from .intervals import Interval, binary_entropy
from .models import Kind, ProcessModel
from .series import level_weight, squared_level_tail, tail_sum_bracket

MIN_ENTRY_MASS = 1e-30

DEFAULT_PATH_BUDGET = 100_000_000
DEFAULT_ENTRY_BUDGET = 2_000_000

_CACHE_MAGIC = b"XLBT"
_CACHE_VERSION = 1


class BudgetExceededError(RuntimeError):
    """Raised when enumeration would exceed its path or entry budget."""


class LabelDisagreementError(ValueError):
    """A conditioning label computed from the past block disagreed with the
    value computed from the future block on a positive-mass entry; this
    signals a broken decoder, never a valid table."""


@dataclass(frozen=True)
class MIResult:
    """A value in bits with a certified error interval around it."""

    value: float
    err_low: float
    err_high: float

    @property
    def lower(self) -> float:
        return self.value - self.err_low

    @property
    def upper(self) -> float:
        return self.value + self.err_high

    @property
    def width(self) -> float:
        return self.err_low + self.err_high


@dataclass
class JointBlockTable:
    """Finite joint law of (past, future) blocks plus unassigned-mass tracking.

    Keys are (past, future) byte strings of length n each, one byte per
    symbol.  `pruned_mass` encloses the true probability that the table does
    not represent; `entry_slack` bounds sum_k |true_k - stored_k| over keys.
    """

    n: int
    alphabet_size: int
    entries: dict[tuple[bytes, bytes], float]
    pruned_mass: Interval
    entry_slack: float = 0.0
    meta: dict = field(default_factory=dict)

    def assigned_mass(self) -> float:
        return math.fsum(self.entries.values())

    def conservation_interval(self) -> Interval:
        """Interval that must contain 1 if the table conserved probability."""
        total = self.assigned_mass()
        slack = self.entry_slack + 1e-12 * max(1, len(self.entries))
        return Interval(
            total + self.pruned_mass.lo - slack,
            total + self.pruned_mass.hi + slack,
        )

    def past_marginal(self) -> dict[bytes, float]:
        out: dict[bytes, float] = {}
        for (past, _), p in self.entries.items():
            out[past] = out.get(past, 0.0) + p
        return out

    def future_marginal(self) -> dict[bytes, float]:
        out: dict[bytes, float] = {}
        for (_, future), p in self.entries.items():
            out[future] = out.get(future, 0.0) + p
        return out

    def _finalize(self) -> "JointBlockTable":
        tiny = [k for k, p in self.entries.items() if p < MIN_ENTRY_MASS]
        if tiny:
            dropped = math.fsum(self.entries.pop(k) for k in tiny)
            self.pruned_mass = self.pruned_mass + Interval.point(dropped)
        return self


def enumerate_joint(
    model: ProcessModel,
    n: int,
    level_cutoff: int,
    prune_eps: float = 0.0,
    *,
    tail_aggregation: bool = False,
    path_budget: int = DEFAULT_PATH_BUDGET,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
) -> JointBlockTable:
    """Materialise the joint (past, future) block law at block length n.

    `level_cutoff` truncates the level support (cyclic kinds) or the branch
    fan-out (ergodic kind); the discarded mass is accounted in
    `pruned_mass`, never silently renormalized.  `prune_eps` drops ergodic
    paths whose probability falls below it.  `tail_aggregation` (first kind
    only) replaces the level tail with its exact aggregate: beyond level 2n a
    window holds at most one non-zero symbol, so the whole tail collapses to
    2n+1 keys with bracketed masses and the table covers the full support.
    """
    if n < 1:
        raise ValueError(f"block length must be >= 1, got {n}")
    if level_cutoff < 2:
        raise ValueError(f"level cutoff must be >= 2, got {level_cutoff}")
    if not 0.0 <= prune_eps < 1.0:
        raise ValueError(f"prune threshold must lie in [0, 1), got {prune_eps}")
    if tail_aggregation:
        if model.kind is not Kind.HPM1:
            raise ValueError("tail aggregation applies to the single-marker cyclic kind only")
        if model.fixed_level is not None:
            raise ValueError("tail aggregation needs the full heavy-tailed level law")
        table = _enumerate_hpm1_aggregated(model, n, level_cutoff, entry_budget)
    elif model.kind is Kind.HMC:
        table = _enumerate_hmc(model, n, level_cutoff, prune_eps, path_budget, entry_budget)
    else:
        table = _enumerate_cyclic(model, n, level_cutoff, entry_budget)
    table.meta.update(
        {
            "kind": model.kind.value,
            "alpha": model.alpha,
            "n": n,
            "level_cutoff": level_cutoff,
            "prune_eps": prune_eps,
            "tail_aggregation": tail_aggregation,
            "fixed_level": model.fixed_level,
        }
    )
    return table._finalize()


def _levels(model: ProcessModel, level_cutoff: int) -> Iterable[int]:
    if model.fixed_level is not None:
        return [model.fixed_level] if model.fixed_level <= level_cutoff else []
    return range(2, level_cutoff + 1)


def _enumerate_cyclic(
    model: ProcessModel, n: int, level_cutoff: int, entry_budget: int
) -> JointBlockTable:
    length = 2 * n
    c_relw = 0.0 if model.fixed_level is not None else model.norm_c.width / model.norm_c.mid
    entries: dict[tuple[bytes, bytes], float] = {}
    assigned = 0.0
    for m in _levels(model, level_cutoff):
        level_mass = model.level_mass(m).mid
        assigned += level_mass
        if model.kind is Kind.HPM1 and m >= length:
            # A window sees at most one marker symbol: 2n single-marker
            # windows with mass P/m each, the rest of the cycle is all zero.
            per_phase = level_mass / m
            buf = bytearray(length)
            for j in range(length):
                buf[j] = 1
                key = (bytes(buf[:n]), bytes(buf[n:]))
                entries[key] = entries.get(key, 0.0) + per_phase
                buf[j] = 0
            key = (bytes(n), bytes(n))
            entries[key] = entries.get(key, 0.0) + level_mass * (m - length) / m
        else:
            word = model.emission_word(m)
            r = len(word)
            ext = word * ((length + r - 1) // r + 1)
            per_phase = level_mass / r
            for k in range(r):
                win = ext[k : k + length]
                key = (win[:n], win[n:])
                entries[key] = entries.get(key, 0.0) + per_phase
        if len(entries) > entry_budget:
            raise BudgetExceededError(
                f"table exceeded entry budget {entry_budget} at level {m} (n={n})"
            )
    return JointBlockTable(
        n=n,
        alphabet_size=len(model.alphabet),
        entries=entries,
        pruned_mass=model.level_tail_mass(level_cutoff),
        entry_slack=0.5 * c_relw * assigned,
    )


def _enumerate_hpm1_aggregated(
    model: ProcessModel, n: int, level_cutoff: int, entry_budget: int
) -> JointBlockTable:
    length = 2 * n
    c_iv = model.norm_c
    alpha = model.alpha
    entries: dict[tuple[bytes, bytes], float] = {}
    slack = 0.0

    # Exact region: levels short enough that a window shows the full period.
    # Always covers [2, 2n) regardless of level_cutoff, which only moves the
    # boundary between numeric summation and the bracketed tail.
    assigned = 0.0
    for m in range(2, length):
        level_mass = model.level_mass(m).mid
        assigned += level_mass
        word = model.emission_word(m)
        ext = word * ((length + m - 1) // m + 1)
        per_phase = level_mass / m
        for k in range(m):
            win = ext[k : k + length]
            key = (win[:n], win[n:])
            entries[key] = entries.get(key, 0.0) + per_phase
    slack += 0.5 * (c_iv.width / c_iv.mid) * assigned

    # Aggregated region: every level m >= 2n contributes the same 2n+1 keys.
    m0 = max(length, 2)
    num_top = max(level_cutoff, 1 << 18, m0)
    ms = np.arange(m0, num_top + 1, dtype=np.float64)
    w = 1.0 / (ms * np.log2(ms) ** alpha)
    sum_w = float(np.sum(w))
    sum_w_over_m = float(np.sum(w / ms))
    tail_w = tail_sum_bracket(alpha, num_top + 1).interval
    tail_w_over_m = squared_level_tail(alpha, num_top + 1)

    marker_mass = c_iv * (Interval.point(sum_w_over_m) + tail_w_over_m)
    zero_mass = c_iv * (
        (Interval.point(sum_w) + tail_w)
        - float(length) * (Interval.point(sum_w_over_m) + tail_w_over_m)
    )
    zero_mass = zero_mass.clamp(0.0, 1.0)

    buf = bytearray(length)
    for j in range(length):
        buf[j] = 1
        key = (bytes(buf[:n]), bytes(buf[n:]))
        entries[key] = entries.get(key, 0.0) + marker_mass.mid
        buf[j] = 0
    key = (bytes(n), bytes(n))
    entries[key] = entries.get(key, 0.0) + zero_mass.mid
    slack += 0.5 * (length * marker_mass.width + zero_mass.width)

    if len(entries) > entry_budget:
        raise BudgetExceededError(f"table exceeded entry budget {entry_budget} (n={n})")
    return JointBlockTable(
        n=n,
        alphabet_size=len(model.alphabet),
        entries=entries,
        pruned_mass=Interval.point(0.0),
        entry_slack=slack,
    )


def _enumerate_hmc(
    model: ProcessModel,
    n: int,
    level_cutoff: int,
    prune_eps: float,
    path_budget: int,
    entry_budget: int,
) -> JointBlockTable:
    length = 2 * n
    if model.fixed_level is not None:
        branch_levels = [model.fixed_level]
        branch_p = {model.fixed_level: 1.0}
        branch_tail = Interval.point(0.0)
        seed_masses = {model.fixed_level: 1.0 / model.phase_count(model.fixed_level)}
        relw = 0.0
    else:
        branch_levels = list(range(2, level_cutoff + 1))
        d_mid = model.norm_d.mid
        branch_p = {
            m: d_mid * level_weight(m, model.alpha) / model.phase_count(m)
            for m in branch_levels
        }
        branch_tail = model.branch_tail_mass(level_cutoff)
        c_mid = model.norm_c.mid
        seed_masses = {
            m: c_mid * level_weight(m, model.alpha) / model.phase_count(m)
            for m in branch_levels
        }
        # Each path multiplies one stationary weight and at most 2n branch
        # weights, so the constant enclosures enter with these multipliers.
        relw = model.norm_c.width / model.norm_c.mid + length * (
            model.norm_d.width / model.norm_d.mid
        )
    words = {m: model.emission_word(m) for m in branch_levels}

    entries: dict[tuple[bytes, bytes], float] = {}
    pruned_lo = 0.0
    pruned_hi = 0.0
    extensions = 0
    assigned = 0.0

    use_heap = prune_eps > 0.0
    frontier: list = []

    def push(prefix: bytes, prob: float, m: int, k: int) -> None:
        nonlocal extensions
        extensions += 1
        if extensions > path_budget:
            raise BudgetExceededError(
                f"path budget {path_budget} exceeded (n={n}, cutoff={level_cutoff}, "
                f"prune_eps={prune_eps})"
            )
        if use_heap:
            heappush(frontier, (-prob, prefix, m, k))
        else:
            frontier.append((prob, prefix, m, k))

    for m in branch_levels:
        word = words[m]
        for k in range(1, len(word) + 1):
            push(b"", seed_masses[m], m, k)
    if model.fixed_level is None:
        seed_tail = model.level_tail_mass(level_cutoff)
        pruned_lo += seed_tail.lo
        pruned_hi += seed_tail.hi

    while frontier:
        if use_heap:
            neg, prefix, m, k = heappop(frontier)
            prob = -neg
        else:
            prob, prefix, m, k = frontier.pop()
        word = words[m]
        take = word[k - 1 :]
        need = length - len(prefix)
        if len(take) >= need:
            win = prefix + take[:need]
            key = (win[:n], win[n:])
            entries[key] = entries.get(key, 0.0) + prob
            assigned += prob
            if len(entries) > entry_budget:
                raise BudgetExceededError(
                    f"table exceeded entry budget {entry_budget} (n={n})"
                )
            continue
        prefix2 = prefix + take
        pruned_lo += prob * branch_tail.lo
        pruned_hi += prob * branch_tail.hi
        for nxt in branch_levels:
            p2 = prob * branch_p[nxt]
            if p2 < prune_eps:
                pruned_lo += p2
                pruned_hi += p2
            else:
                push(prefix2, p2, nxt, 1)

    return JointBlockTable(
        n=n,
        alphabet_size=len(model.alphabet),
        entries=entries,
        pruned_mass=Interval(pruned_lo, pruned_hi).clamp(0.0, 1.0),
        entry_slack=0.5 * relw * assigned,
    )


# ----- information quantities ------------------------------------------------


def _plug_in_entropy(masses: Iterable[float]) -> float:
    """Entropy of the masses renormalized to a distribution."""
    arr = np.asarray(list(masses), dtype=np.float64)
    if arr.size == 0:
        return 0.0
    total = float(np.sum(arr))
    if total <= 0.0:
        return 0.0
    q = arr / total
    return float(-np.sum(q * np.log2(q)))


def _entropy_result(
    masses: list[float], delta: float, support_log2: float, entry_slack: float
) -> MIResult:
    """Certified entropy from a subnormalized mass list.

    The value is the plug-in entropy of the renormalized masses; writing the
    true law as a (1-delta)/delta mixture of the renormalized table and the
    unassigned remainder bounds the deviation by delta*log2(support) + h(delta)
    in both directions.  The slack of the stored masses enters through the
    worst slope of -q*log2(q) above the smallest retained atom.
    """
    value = _plug_in_entropy(masses)
    delta = min(max(delta, 0.0), 1.0)
    err = delta * support_log2 + binary_entropy(delta)
    if entry_slack > 0.0 and masses:
        total = math.fsum(masses)
        q_min = min(masses) / total
        slope = (max(0.0, -math.log(q_min)) + 1.0) / math.log(2.0)
        err += slope * 2.0 * entry_slack / total
    return MIResult(value, err, err)


def entropy(table: JointBlockTable) -> MIResult:
    """Certified joint entropy of the renormalized table in bits (0*log 0 := 0).

    Renormalizing by the assigned mass makes the value the entropy of the
    process conditioned on the retained support; the pruned mass enters the
    certified error bar, never the value.
    """
    support = 2 * table.n * math.log2(table.alphabet_size)
    return _entropy_result(
        list(table.entries.values()), table.pruned_mass.hi, support, table.entry_slack
    )


def _marginal_entropy(table: JointBlockTable, marginal: dict[bytes, float]) -> MIResult:
    support = table.n * math.log2(table.alphabet_size)
    return _entropy_result(
        list(marginal.values()), table.pruned_mass.hi, support, table.entry_slack
    )


def block_mi(table: JointBlockTable) -> MIResult:
    """Certified block mutual information H(past) + H(future) - H(joint)."""
    h_past = _marginal_entropy(table, table.past_marginal())
    h_future = _marginal_entropy(table, table.future_marginal())
    h_joint = entropy(table)
    value = h_past.value + h_future.value - h_joint.value
    err = h_past.err_high + h_future.err_high + h_joint.err_high
    return MIResult(value, err, err)


def label_entropy(
    table: JointBlockTable, past_label: Callable, future_label: Callable | None = None
) -> MIResult:
    """Certified entropy of a label that both blocks determine."""
    groups = _label_groups(table, past_label, future_label)
    masses = [math.fsum(g.values()) for g in groups.values()]
    support = table.n * math.log2(table.alphabet_size)
    return _entropy_result(masses, table.pruned_mass.hi, support, table.entry_slack)


def _label_groups(
    table: JointBlockTable, past_label: Callable, future_label: Callable | None
) -> dict:
    if future_label is None:
        future_label = past_label
    groups: dict = {}
    for (past, future), p in table.entries.items():
        zp = past_label(past)
        zf = future_label(future)
        if zp != zf:
            raise LabelDisagreementError(
                f"label mismatch on entry past={list(past)} future={list(future)}: "
                f"past-computed {zp!r} vs future-computed {zf!r}"
            )
        groups.setdefault(zp, {})[(past, future)] = p
    return groups


def _sub_table_mi(sub: dict[tuple[bytes, bytes], float]) -> float:
    """Plug-in mutual information of a renormalized sub-table."""
    total = math.fsum(sub.values())
    if total <= 0.0:
        return 0.0
    past: dict[bytes, float] = {}
    future: dict[bytes, float] = {}
    joint = []
    for (p_key, f_key), p in sub.items():
        q = p / total
        joint.append(q)
        past[p_key] = past.get(p_key, 0.0) + q
        future[f_key] = future.get(f_key, 0.0) + q
    return (
        _plug_in_entropy(past.values())
        + _plug_in_entropy(future.values())
        - _plug_in_entropy(joint)
    )


def conditional_mi_given(
    table: JointBlockTable, past_label: Callable, future_label: Callable | None = None
) -> MIResult:
    """Certified I(past; future | label) for a label both blocks determine.

    The label is evaluated on the past component and on the future component
    of every entry; any disagreement raises LabelDisagreementError.  The
    value is the label-mass-weighted average of the renormalized per-group
    mutual informations, which for a two-sided label equals
    block_mi(table) - H(label) identically.
    """
    groups = _label_groups(table, past_label, future_label)
    total = table.assigned_mass()
    if total <= 0.0:
        return MIResult(0.0, 0.0, 0.0)
    value = math.fsum(
        (math.fsum(sub.values()) / total) * _sub_table_mi(sub) for sub in groups.values()
    )
    err = block_mi(table).err_high + label_entropy(table, past_label, future_label).err_high
    return MIResult(value, err, err)


def triple_information(table: JointBlockTable, event: Callable) -> float:
    """Interaction information I(past; future; 1_B) for a block-pair event B.

    Computed on the renormalized table as I(past;future) minus the
    event-mass-weighted conditional informations; the information diagram
    bounds it by H(1_B) <= 1 bit in absolute value.
    """
    total = math.fsum(table.entries.values())
    if total <= 0.0:
        return 0.0
    inside: dict = {}
    outside: dict = {}
    for key, p in table.entries.items():
        (inside if event(key) else outside)[key] = p
    full_mi = _sub_table_mi(table.entries)
    mass_in = math.fsum(inside.values()) / total
    mass_out = math.fsum(outside.values()) / total
    cond = 0.0
    if inside:
        cond += mass_in * _sub_table_mi(inside)
    if outside:
        cond += mass_out * _sub_table_mi(outside)
    return full_mi - cond


# ----- table plumbing ---------------------------------------------------------


def merge_tables(a: JointBlockTable, b: JointBlockTable) -> JointBlockTable:
    """Associative, commutative merge of partial tables (masses add)."""
    if (a.n, a.alphabet_size) != (b.n, b.alphabet_size):
        raise ValueError("cannot merge tables with different shapes")
    entries = dict(a.entries)
    for key, p in b.entries.items():
        entries[key] = entries.get(key, 0.0) + p
    return JointBlockTable(
        n=a.n,
        alphabet_size=a.alphabet_size,
        entries=entries,
        pruned_mass=a.pruned_mass + b.pruned_mass,
        entry_slack=a.entry_slack + b.entry_slack,
        meta={**a.meta, **b.meta},
    )._finalize()


def write_table_csv(table: JointBlockTable, path) -> None:
    """Columns past,future,probability; symbols rendered as digit strings."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("past,future,probability\n")
        for (past, future), p in sorted(table.entries.items()):
            fh.write(f"{_render(past)},{_render(future)},{p:.17g}\n")


def _render(block: bytes) -> str:
    return "".join(str(b) for b in block)


def write_table_cache(table: JointBlockTable, path) -> None:
    """Versioned binary cache: header, then fixed-width records."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(
            struct.pack(
                "<IIIqdd d",
                _CACHE_VERSION,
                table.n,
                table.alphabet_size,
                len(table.entries),
                table.pruned_mass.lo,
                table.pruned_mass.hi,
                table.entry_slack,
            )
        )
        for (past, future), p in table.entries.items():
            fh.write(past)
            fh.write(future)
            fh.write(struct.pack("<d", p))


def read_table_cache(path) -> JointBlockTable:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CACHE_MAGIC:
            raise ValueError(f"not a table cache file: bad magic {magic!r}")
        header = struct.Struct("<IIIqdd d")
        version, n, alphabet_size, count, plo, phi, slack = header.unpack(
            fh.read(header.size)
        )
        if version != _CACHE_VERSION:
            raise ValueError(f"unsupported table cache version {version}")
        entries: dict[tuple[bytes, bytes], float] = {}
        rec = struct.Struct("<d")
        for _ in range(count):
            past = fh.read(n)
            future = fh.read(n)
            (p,) = rec.unpack(fh.read(rec.size))
            entries[(past, future)] = p
    return JointBlockTable(
        n=n,
        alphabet_size=alphabet_size,
        entries=entries,
        pruned_mass=Interval(plo, phi),
        entry_slack=slack,
    )
