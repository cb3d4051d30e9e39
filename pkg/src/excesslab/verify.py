"""Self-check suite behind the `verify` command.

Each check returns a named pass/fail entry with a human-readable detail
string; the collection serialises to a machine-readable JSON ledger.  The
checks mirror the library's contracts:

  series_brackets     direct sums of the two bracketed series lie inside
                      their closed-form enclosures;
  decomposition       |E(n) - H(D) - I(past;future|D)| within certified width;
  decoder_agreement   past- and future-decoded levels agree on sampled
                      windows and match the hidden truth where defined;
  sandwich            H(D) <= upper(E(n)), lower(E(n)) <= upper bound curve,
                      and the data-processing comparison against the
                      restricted hidden-state entropy;
  triple_bound        |I(past; future; 1_B)| <= H(1_B) <= 1 over a predicate
                      grid;
  monotonicity        certified E(n) intervals consistent with E nondecreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .decoders import (
    decoded_level_entropy,
    future_decoder,
    hidden_truth,
    mi_decomposition_residual,
    past_decoder,
)
from .exact import JointBlockTable, block_mi, enumerate_joint, triple_information
from .analysis import block_mi_upper_bound
from .intervals import binary_entropy
from .models import Kind, ProcessModel
from .sampling import sample_trajectory
from .series import partial_sum_bracket, tail_sum_bracket


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class VerificationLedger:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append(CheckResult(name, bool(passed), detail))

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def check_series_brackets(
    alphas=(1.2, 1.5, 1.8, 2.0), points=(2, 2**4, 2**10, 2**20)
) -> CheckResult:
    failures = []
    for alpha in alphas:
        for n in points:
            m = np.arange(2, n + 1, dtype=np.float64)
            direct_partial = float(np.sum(1.0 / (m * np.log2(m) ** (alpha - 1.0))))
            br = partial_sum_bracket(alpha, n)
            if not br.lower - 1e-12 <= direct_partial <= br.upper + 1e-12:
                failures.append(f"partial alpha={alpha} n={n}")
            # Telescoping: the tail brackets at n and 2n must enclose the
            # directly summed finite segment [n, 2n).
            seg = np.arange(n, 2 * n, dtype=np.float64)
            direct_seg = float(np.sum(1.0 / (seg * np.log2(seg) ** alpha)))
            lo = tail_sum_bracket(alpha, n).lower - tail_sum_bracket(alpha, 2 * n).upper
            hi = tail_sum_bracket(alpha, n).upper - tail_sum_bracket(alpha, 2 * n).lower
            if not lo - 1e-12 <= direct_seg <= hi + 1e-12:
                failures.append(f"tail alpha={alpha} n={n}")
    detail = "all direct sums inside brackets" if not failures else "; ".join(failures)
    return CheckResult("series_brackets", not failures, detail)


def check_decomposition(tables: dict, fudge: float = 0.0) -> CheckResult:
    failures = []
    worst = 0.0
    for (kind, alpha, n), table in tables.items():
        chk = mi_decomposition_residual(table, kind)
        worst = max(worst, abs(chk.residual))
        if abs(chk.residual) > chk.allowance + fudge:
            failures.append(
                f"{kind} alpha={alpha} n={n}: residual {chk.residual:.3e} > allowance {chk.allowance:.3e}"
            )
    detail = f"worst residual {worst:.3e}" if not failures else "; ".join(failures)
    return CheckResult("decomposition", not failures, detail)


def check_decoder_agreement(
    model: ProcessModel,
    windows: int = 100_000,
    n_values=(6, 12),
    seed: int = 2024,
    past_override: Callable | None = None,
) -> CheckResult:
    """Compare past-decoded vs future-decoded levels on sampled windows and
    against the hidden truth at the block boundary."""
    kind = model.kind
    past = past_override or past_decoder(kind)
    future = future_decoder(kind)
    disagreements = 0
    truth_errors = 0
    seen = 0
    stream = 0
    per_traj = 500
    while seen < windows:
        for n in n_values:
            length = 2 * n + per_traj
            traj = sample_trajectory(model, length, seed, stream=stream, keep_hidden=True)
            stream += 1
            sym = traj.symbols
            for t in range(per_traj):
                p_block = sym[t : t + n]
                f_block = sym[t + n : t + 2 * n]
                dp = past(p_block)
                df = future(f_block)
                if dp != df:
                    disagreements += 1
                truth = hidden_truth(kind, traj.hidden[t + n - 1], n)
                if truth != 0 and dp != truth:
                    truth_errors += 1
                seen += 1
                if seen >= windows:
                    break
            if seen >= windows:
                break
    ok = disagreements == 0 and truth_errors == 0
    detail = (
        f"{seen} windows, {disagreements} past/future disagreements, "
        f"{truth_errors} hidden-truth mismatches"
    )
    return CheckResult(f"decoder_agreement[{kind.value}]", ok, detail)


def check_sandwich(tables: dict, series_cutoff: int) -> CheckResult:
    failures = []
    for (kind, alpha, n), table in tables.items():
        e = block_mi(table)
        h_d = decoded_level_entropy(kind, alpha, n, series_cutoff)
        if h_d.lower > e.upper + 1e-9:
            failures.append(f"{kind} a={alpha} n={n}: H(D) {h_d.lower:.4f} > E upper {e.upper:.4f}")
        bound = block_mi_upper_bound(kind, alpha, n, series_cutoff)
        if e.lower > bound.hi + 1e-9:
            failures.append(f"{kind} a={alpha} n={n}: E lower {e.lower:.4f} > bound {bound.hi:.4f}")
        gap = _data_processing_gap(table)
        if gap is not None and gap > 1e-9:
            failures.append(f"{kind} a={alpha} n={n}: data-processing gap {gap:.3e}")
    detail = "all sandwich inequalities hold" if not failures else "; ".join(failures)
    return CheckResult("sandwich", not failures, detail)


def _data_processing_gap(table: JointBlockTable) -> float | None:
    """lower(E) minus the restricted hidden-state entropy plus tail slack.

    Only meaningful for tables that truncate the level support (the
    aggregated tables cover all levels, where the hidden-state entropy is
    infinite and the comparison is vacuous).
    """
    meta = table.meta
    if meta.get("tail_aggregation") or meta.get("fixed_level"):
        return None
    kind = Kind(meta["kind"])
    model = ProcessModel(kind, meta["alpha"], series_cutoff=meta.get("series_cutoff", 10**6))
    cutoff = meta["level_cutoff"]
    masses = []
    for m in range(2, cutoff + 1):
        lm = model.level_mass(m).mid
        r = model.phase_count(m)
        masses.extend([lm / r] * r)
    arr = np.asarray(masses)
    h_restricted = float(-np.sum(arr * np.log2(arr)))
    delta = table.pruned_mass.hi
    slack = delta * 2 * table.n * math.log2(table.alphabet_size) + binary_entropy(delta)
    return block_mi(table).lower - (h_restricted + slack)


def predicate_grid(alphabet: tuple[int, ...], count: int = 20) -> list:
    """A deterministic grid of at least `count` block-pair predicates."""
    preds = []
    for sym in alphabet:
        preds.append(lambda key, s=sym: s in key[0])
        preds.append(lambda key, s=sym: s in key[1])
        preds.append(lambda key, s=sym: key[0][0] == s)
        preds.append(lambda key, s=sym: key[1][-1] == s)
        preds.append(lambda key, s=sym: key[0].count(s) > key[1].count(s))
    preds.append(lambda key: key[0] < key[1])
    preds.append(lambda key: key[0] == key[1])
    preds.append(lambda key: sum(key[0]) % 2 == 0)
    preds.append(lambda key: sum(key[1]) % 2 == 1)
    preds.append(lambda key: (sum(key[0]) + sum(key[1])) % 3 == 0)
    preds.append(lambda key: key[0][0] == key[1][-1])
    preds.append(lambda key: key[0][-1] == key[1][0])
    preds.append(lambda key: len(set(key[0])) > 1)
    preds.append(lambda key: len(set(key[1])) == 1)
    preds.append(lambda key: key[0][: len(key[0]) // 2] == key[1][: len(key[1]) // 2])
    preds.append(lambda key: max(key[0]) >= max(key[1]))
    preds.append(lambda key: True)
    k = 2
    while len(preds) < count:
        preds.append(lambda key, kk=k: sum(key[0]) % (kk + 2) == 0)
        k += 1
    return preds[:count]


def check_triple_bound(tables: dict, predicates_per_table: int = 20) -> CheckResult:
    failures = []
    worst = 0.0
    for (kind, alpha, n), table in tables.items():
        total = sum(table.entries.values())
        for i, pred in enumerate(predicate_grid(tuple(range(table.alphabet_size)), predicates_per_table)):
            value = triple_information(table, pred)
            mass_in = sum(p for k, p in table.entries.items() if pred(k)) / total
            h_ind = binary_entropy(mass_in)
            worst = max(worst, abs(value))
            if abs(value) > h_ind + 1e-9 or abs(value) > 1.0 + 1e-9:
                failures.append(f"{kind} a={alpha} n={n} pred#{i}: |{value:.4f}| > H={h_ind:.4f}")
    detail = f"worst |triple| {worst:.4f}" if not failures else "; ".join(failures)
    return CheckResult("triple_bound", not failures, detail)


def check_monotonicity(results: dict) -> CheckResult:
    """Certified intervals must allow a nondecreasing E(n) per (kind, alpha)."""
    by_series: dict = {}
    for (kind, alpha, n), mi in results.items():
        by_series.setdefault((kind, alpha), []).append((n, mi))
    failures = []
    for (kind, alpha), seq in by_series.items():
        seq.sort()
        for (n1, a), (n2, b) in zip(seq, seq[1:]):
            if b.upper < a.lower - 1e-9:
                failures.append(
                    f"{kind} a={alpha}: upper(E({n2}))={b.upper:.4f} < lower(E({n1}))={a.lower:.4f}"
                )
    detail = "intervals consistent with nondecreasing E(n)" if not failures else "; ".join(failures)
    return CheckResult("monotonicity", not failures, detail)


def run_verification(
    kinds=(Kind.HPM1, Kind.HPM2, Kind.HMC),
    alphas=(1.5, 2.0),
    block_lengths=(2, 4, 6, 8),
    series_cutoff: int = 1_000_000,
    windows: int = 100_000,
    decoder_fault: bool = False,
    hmc_level_cutoff: int = 32,
    prune_eps: float = 0.0,
) -> VerificationLedger:
    """Run the whole suite at a configurable desk scale."""
    ledger = VerificationLedger()
    ledger.add(*_astuple(check_series_brackets()))

    tables: dict = {}
    mi_results: dict = {}
    for kind in kinds:
        kind = Kind(kind)
        for alpha in alphas:
            model = ProcessModel(kind, alpha, series_cutoff=series_cutoff)
            for n in block_lengths:
                if kind is Kind.HMC:
                    table = enumerate_joint(
                        model, n, hmc_level_cutoff, prune_eps if n > 6 else 0.0
                    )
                elif kind is Kind.HPM1:
                    table = enumerate_joint(model, n, 1 << 12, tail_aggregation=True)
                else:
                    table = enumerate_joint(model, n, max(4, (1 << (n // 2)) - 1))
                table.meta["series_cutoff"] = series_cutoff
                tables[(kind, alpha, n)] = table
                mi_results[(kind, alpha, n)] = block_mi(table)

    ledger.add(*_astuple(check_decomposition(tables)))
    for kind in kinds:
        kind = Kind(kind)
        model = ProcessModel(kind, alphas[0], series_cutoff=series_cutoff)
        override = None
        if decoder_fault:
            true_past = past_decoder(kind)

            def override(block, _f=true_past):  # deliberately corrupted hook
                v = _f(block)
                return v + 1 if v else 0

        ledger.add(
            *_astuple(
                check_decoder_agreement(model, windows=windows, past_override=override)
            )
        )
    ledger.add(*_astuple(check_sandwich(tables, series_cutoff)))
    small = {k: t for k, t in tables.items() if k[2] <= 8 and len(t.entries) < 50_000}
    ledger.add(*_astuple(check_triple_bound(small)))
    ledger.add(*_astuple(check_monotonicity(mi_results)))
    return ledger


def _astuple(check: CheckResult):
    return check.name, check.passed, check.detail
