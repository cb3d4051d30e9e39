"""Exact-engine contracts: oracle equivalence, conservation, certified
entropies and mutual informations, conditioning, and table plumbing."""

import math

import pytest

from excesslab.exact import (
    BudgetExceededError,
    JointBlockTable,
    LabelDisagreementError,
    block_mi,
    conditional_mi_given,
    entropy,
    enumerate_joint,
    label_entropy,
    merge_tables,
    read_table_cache,
    triple_information,
    write_table_cache,
    write_table_csv,
)
from excesslab.intervals import Interval

from conftest import assert_tables_match, make_model, naive_cyclic_table, naive_hmc_table


def manual_table(n, alphabet_size, entries, pruned=0.0, slack=0.0):
    return JointBlockTable(
        n=n,
        alphabet_size=alphabet_size,
        entries=dict(entries),
        pruned_mass=Interval.point(pruned),
        entry_slack=slack,
    )


# ----- enumeration ------------------------------------------------------------


def test_degenerate_level2_table():
    deg = make_model("hpm1", 2.0, fixed_level=2)
    t = enumerate_joint(deg, 2, 4)
    assert t.entries == {
        (bytes([0, 1]), bytes([0, 1])): pytest.approx(0.5),
        (bytes([1, 0]), bytes([1, 0])): pytest.approx(0.5),
    }
    assert t.pruned_mass.hi == 0.0


@pytest.mark.parametrize("kind", ("hpm1", "hpm2", "hmc"))
def test_conservation_at_n1(kind):
    m = make_model(kind, 1.5)
    t = enumerate_joint(m, 1, 32 if kind == "hmc" else 256, 0.0)
    assert t.conservation_interval().contains(1.0)


def test_enumerate_validation():
    m = make_model("hpm1", 1.5)
    with pytest.raises(ValueError):
        enumerate_joint(m, 0, 16)
    with pytest.raises(ValueError):
        enumerate_joint(m, 2, 1)
    with pytest.raises(ValueError):
        enumerate_joint(m, 2, 16, prune_eps=1.0)
    with pytest.raises(ValueError):
        enumerate_joint(make_model("hpm2", 1.5), 2, 16, tail_aggregation=True)


def test_hpm1_matches_bruteforce_oracle_n3():
    m = make_model("hpm1", 1.5)
    reference = naive_cyclic_table(m, 3, 1 << 10)
    table = enumerate_joint(m, 3, 1 << 10)
    assert_tables_match(reference, table.entries)


def test_hpm2_matches_bruteforce_oracle():
    m = make_model("hpm2", 1.5)
    reference = naive_cyclic_table(m, 4, 1 << 8)
    table = enumerate_joint(m, 4, 1 << 8)
    assert_tables_match(reference, table.entries)


def test_hmc_matches_naive_reference():
    h = make_model("hmc", 1.5)
    reference = naive_hmc_table(h, 3, 1 << 5)
    table = enumerate_joint(h, 3, 1 << 5)
    assert_tables_match(reference, table.entries)


def test_hpm1_block_mi_matches_oracle_n8_cutoff_4096():
    m = make_model("hpm1", 1.5)
    reference = naive_cyclic_table(m, 8, 1 << 12)
    table = enumerate_joint(m, 8, 1 << 12)
    assert_tables_match(reference, table.entries)
    ref_table = JointBlockTable(
        n=8,
        alphabet_size=2,
        entries=reference,
        pruned_mass=table.pruned_mass,
        entry_slack=table.entry_slack,
    )
    assert block_mi(ref_table).value == pytest.approx(block_mi(table).value, abs=1e-10)


def test_hmc_pruning_moves_mass_to_pruned():
    h = make_model("hmc", 1.5)
    full = enumerate_joint(h, 4, 1 << 5)
    pruned = enumerate_joint(h, 4, 1 << 5, prune_eps=1e-6)
    assert len(pruned.entries) < len(full.entries)
    assert pruned.pruned_mass.hi > full.pruned_mass.hi
    assert pruned.conservation_interval().contains(1.0)


def test_path_budget_guard():
    h = make_model("hmc", 1.5)
    with pytest.raises(BudgetExceededError):
        enumerate_joint(h, 6, 1 << 5, path_budget=1000)


def test_entry_budget_guard():
    m = make_model("hpm2", 1.5)
    with pytest.raises(BudgetExceededError):
        enumerate_joint(m, 6, 1 << 10, entry_budget=100)


# ----- tail aggregation --------------------------------------------------------


def test_aggregated_extends_generic_table():
    m = make_model("hpm1", 1.5)
    generic = enumerate_joint(m, 4, 1 << 10)
    agg = enumerate_joint(m, 4, 1 << 10, tail_aggregation=True)
    # same keys plus possibly the all-zero/one-marker keys carrying tail mass
    assert set(generic.entries) <= set(agg.entries)
    diff = sum(agg.entries[k] - generic.entries.get(k, 0.0) for k in agg.entries)
    assert diff == pytest.approx(generic.pruned_mass.mid, abs=1e-6)
    for key, p in agg.entries.items():
        assert p >= generic.entries.get(key, 0.0) - 1e-15
    assert agg.pruned_mass.hi == 0.0
    assert agg.conservation_interval().contains(1.0)


def test_aggregated_mi_close_to_big_cutoff_generic():
    m = make_model("hpm1", 1.5)
    agg = block_mi(enumerate_joint(m, 3, 1 << 10, tail_aggregation=True))
    big = block_mi(enumerate_joint(m, 3, 1 << 17))
    # the generic value still misses tail mass; its certified interval is
    # wide, but the aggregated value must sit below the bound it implies
    assert agg.err_high < 1e-4
    assert abs(agg.value - big.value) <= big.err_high + agg.err_high


# ----- entropies and MI --------------------------------------------------------


def test_entropy_point_mass_is_zero():
    t = manual_table(1, 2, {(bytes([0]), bytes([1])): 1.0})
    assert entropy(t).value == pytest.approx(0.0, abs=1e-15)


def test_entropy_two_equal_masses_is_one_bit():
    t = manual_table(1, 2, {(bytes([0]), bytes([0])): 0.5, (bytes([1]), bytes([1])): 0.5})
    assert entropy(t).value == pytest.approx(1.0)


def test_degenerate_joint_entropy_and_mi_are_one_bit():
    deg = make_model("hpm1", 2.0, fixed_level=2)
    t = enumerate_joint(deg, 2, 4)
    assert entropy(t).value == pytest.approx(1.0)
    for n in (1, 2, 3, 5):
        tn = enumerate_joint(deg, n, 4)
        assert block_mi(tn).value == pytest.approx(1.0)


def test_product_table_has_zero_mi():
    entries = {}
    for a, pa in ((0, 0.3), (1, 0.7)):
        for b, pb in ((0, 0.6), (1, 0.4)):
            entries[(bytes([a]), bytes([b]))] = pa * pb
    t = manual_table(1, 2, entries)
    assert block_mi(t).value == pytest.approx(0.0, abs=1e-12)


def test_entropy_error_accounts_for_pruned_mass():
    entries = {(bytes([0]), bytes([0])): 0.9}
    t = manual_table(1, 2, entries, pruned=0.1)
    mi = entropy(t)
    # delta * 2n log|X| + h(delta)
    expected = 0.1 * 2 * math.log2(2) + (-0.1 * math.log2(0.1) - 0.9 * math.log2(0.9))
    assert mi.err_high == pytest.approx(expected)


def test_mi_error_combines_three_entropies():
    m = make_model("hpm2", 1.5)
    t = enumerate_joint(m, 4, 64)
    e = block_mi(t)
    h_j = entropy(t)
    assert e.err_high > h_j.err_high  # marginal terms add on top


# ----- conditioning -------------------------------------------------------------


def test_conditional_mi_constant_label_equals_block_mi():
    m = make_model("hpm2", 1.5)
    t = enumerate_joint(m, 4, 64)
    cond = conditional_mi_given(t, lambda b: 0)
    assert cond.value == pytest.approx(block_mi(t).value, abs=1e-12)


def test_conditional_mi_full_label_is_zero():
    deg = make_model("hpm1", 2.0, fixed_level=2)
    t = enumerate_joint(deg, 2, 4)
    # past determines the whole pair here, so labelling by the block itself
    # conditions on everything
    cond = conditional_mi_given(t, lambda b: bytes(b))
    assert cond.value == pytest.approx(0.0, abs=1e-14)


def test_conditional_mi_label_disagreement_raises():
    m = make_model("hpm2", 1.5)
    t = enumerate_joint(m, 4, 64)
    with pytest.raises(LabelDisagreementError):
        conditional_mi_given(t, lambda b: b[0], lambda b: -1)


def test_label_entropy_of_constant_label_is_zero():
    m = make_model("hpm1", 1.5)
    t = enumerate_joint(m, 3, 64)
    assert label_entropy(t, lambda b: "x").value == pytest.approx(0.0)


# ----- triple information --------------------------------------------------------


def test_triple_information_trivial_event_is_zero():
    m = make_model("hpm2", 1.5)
    t = enumerate_joint(m, 4, 64)
    assert triple_information(t, lambda key: True) == pytest.approx(0.0, abs=1e-12)


def test_triple_information_independent_components():
    entries = {}
    for a, pa in ((0, 0.5), (1, 0.5)):
        for b, pb in ((0, 0.5), (1, 0.5)):
            entries[(bytes([a]), bytes([b]))] = pa * pb
    t = manual_table(1, 2, entries)
    # an event that depends only on an independent coordinate of the pair
    assert triple_information(t, lambda key: key[0][0] == 0) == pytest.approx(0.0, abs=1e-12)


def test_triple_information_bounded_by_indicator_entropy():
    m = make_model("hpm1", 1.5)
    t = enumerate_joint(m, 6, 1 << 10)
    total = sum(t.entries.values())
    event = lambda key: 1 in key[0]
    value = triple_information(t, event)
    mass = sum(p for k, p in t.entries.items() if event(k)) / total
    h_ind = -mass * math.log2(mass) - (1 - mass) * math.log2(1 - mass)
    assert abs(value) <= h_ind + 1e-12
    assert abs(value) <= 1.0


# ----- plumbing -------------------------------------------------------------------


def test_merge_tables_partition_equals_whole():
    m = make_model("hpm2", 1.5)
    whole = enumerate_joint(m, 3, 100)
    lo = enumerate_joint(make_model("hpm2", 1.5), 3, 40)
    # build the complementary slice by hand from levels 41..100
    hi_entries = {}
    for level in range(41, 101):
        word = m.emission_word(level)
        ext = word * ((6 + len(word) - 1) // len(word) + 1)
        per = m.level_mass(level).mid / len(word)
        for k in range(len(word)):
            win = ext[k : k + 6]
            key = (win[:3], win[3:])
            hi_entries[key] = hi_entries.get(key, 0.0) + per
    hi = JointBlockTable(
        n=3,
        alphabet_size=3,
        entries=hi_entries,
        pruned_mass=whole.pruned_mass - lo.pruned_mass + Interval.point(0.0),
        entry_slack=0.0,
    )
    merged = merge_tables(lo, hi)
    assert set(merged.entries) == set(whole.entries)
    for key in whole.entries:
        assert merged.entries[key] == pytest.approx(whole.entries[key], abs=1e-15)


def test_merge_is_commutative():
    a = enumerate_joint(make_model("hpm1", 1.5), 2, 16)
    b = enumerate_joint(make_model("hpm1", 2.0), 2, 16)
    ab = merge_tables(a, b)
    ba = merge_tables(b, a)
    assert ab.entries == ba.entries
    assert ab.pruned_mass == ba.pruned_mass


def test_table_csv_export(tmp_path):
    m = make_model("hpm1", 1.5)
    t = enumerate_joint(m, 2, 16)
    path = tmp_path / "table.csv"
    write_table_csv(t, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "past,future,probability"
    assert len(lines) == len(t.entries) + 1
    past, future, prob = lines[1].split(",")
    assert set(past) <= set("01") and len(past) == 2
    float(prob)


def test_table_cache_round_trip(tmp_path):
    m = make_model("hmc", 1.5)
    t = enumerate_joint(m, 3, 16)
    path = tmp_path / "table.bin"
    write_table_cache(t, path)
    back = read_table_cache(path)
    assert back.n == t.n
    assert back.alphabet_size == t.alphabet_size
    assert back.entries == t.entries
    assert back.pruned_mass == t.pruned_mass
    assert back.entry_slack == t.entry_slack


def test_table_cache_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a cache")
    with pytest.raises(ValueError):
        read_table_cache(path)


def test_monotonicity_of_certified_intervals():
    m = make_model("hpm2", 1.5)
    results = []
    for n in range(1, 9):
        t = enumerate_joint(m, n, max(4, (1 << (n // 2)) - 1))
        results.append(block_mi(t))
    for a, b in zip(results, results[1:]):
        assert b.upper >= a.lower


def test_degenerate_ergodic_kind_conserves_mass():
    deg = make_model("hmc", 2.0, fixed_level=5)
    t = enumerate_joint(deg, 4, 4)  # fixed level above the cutoff still works
    assert t.conservation_interval().contains(1.0)
    assert t.pruned_mass.hi == 0.0


def test_aggregated_covers_full_support_even_with_tiny_cutoff():
    m = make_model("hpm1", 1.5)
    t = enumerate_joint(m, 8, 4, tail_aggregation=True)
    assert t.conservation_interval().contains(1.0)
    assert t.pruned_mass.hi == 0.0
    ref = enumerate_joint(m, 8, 1 << 12, tail_aggregation=True)
    for key in ref.entries:
        assert t.entries[key] == pytest.approx(ref.entries[key], abs=1e-9)
