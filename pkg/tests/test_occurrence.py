import random

import pytest
from hypothesis import given, settings, strategies as st

from tars.data import Basket, PurchaseHistory
from tars.occurrence import (
    OccurrenceStats,
    Sequence,
    detect_periods,
    is_subsequence,
    median_period_support,
    minimal_occurrences,
    recurrence,
)

from conftest import random_history
from oracles import brute_minimal_occurrences, brute_periods

# day offsets of 01-05, 01-09, 01-13, 01-25, 02-06, 02-14 in 2017
AB_TIMES = (4, 8, 12, 24, 36, 44)
# gaps as listed alongside the example; day arithmetic gives 12 for the third
LISTED_DELTA = (4, 4, 16, 12, 8, 8)


def test_example_a_to_b(example, lab):
    st_ = minimal_occurrences(example, Sequence({lab["a"]}, {lab["b"]}))
    assert st_.head_times == AB_TIMES
    assert st_.intra_times == (4, 4, 12, 8, 4, 8)
    assert st_.inter_times == (4, 4, 12, 12, 8, 8)


def test_listed_gaps_periods_and_recurrence():
    stats = OccurrenceStats(AB_TIMES, (4, 4, 16, 8, 4, 8), LISTED_DELTA)
    ps = detect_periods(stats, 14, 2)
    assert [p.times for p in ps] == [(4, 8), (24, 36, 44)]
    assert [p.support for p in ps] == [2, 3]
    assert recurrence(ps) == 2
    assert median_period_support(ps) == 2.5


def test_single_basket_has_no_occurrences():
    h = PurchaseHistory("c", (Basket(0, {1, 2}),))
    assert not minimal_occurrences(h, Sequence({1}, {2}))
    assert minimal_occurrences(h, Sequence({1}, {2})).support == 0


def test_period_edge_cases():
    stats = OccurrenceStats((1, 3, 5), (2, 2, 2), (2, 2, 2))
    assert [p.times for p in detect_periods(stats, 5, 1)] == [(1, 3, 5)]
    assert detect_periods(stats, 5, 4) == []
    ps = detect_periods(OccurrenceStats((0,), (6,), (6,)), 6, 1)
    assert recurrence(ps) == 1 and median_period_support(ps) == 1
    with pytest.raises(ValueError):
        median_period_support([])


def test_is_subsequence(lab):
    c, d = lab["c"], lab["d"]
    assert is_subsequence(Sequence({c}, {c}), Sequence({c, d}, {c}))
    s = Sequence({1}, {2})
    assert is_subsequence(s, s)
    assert not is_subsequence(Sequence({1}, {2}), Sequence({2}, {1}))


def test_sequence_validation():
    with pytest.raises(ValueError):
        Sequence(set(), {1})
    assert len(Sequence({1, 2}, {2})) == 3
    assert str(Sequence({2, 1}, {3})) == "{1,2}->{3}"


def _random_sequences(rng, items):
    for _ in range(4):
        x = set(rng.sample(items, rng.randint(1, min(2, len(items)))))
        y = set(rng.sample(items, rng.randint(1, min(2, len(items)))))
        yield x, y


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_matches_brute_force(seed):
    rng = random.Random(seed)
    h = random_history(rng, max_items=10)
    for x, y in _random_sequences(rng, sorted(h.items)):
        got = minimal_occurrences(h, Sequence(x, y))
        assert (got.head_times, got.intra_times, got.inter_times) == brute_minimal_occurrences(h.baskets, x, y)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_occurrence_invariants(seed):
    rng = random.Random(seed)
    h = random_history(rng)
    items = sorted(h.items)
    for x, y in _random_sequences(rng, items):
        s = minimal_occurrences(h, Sequence(x, y))
        assert len(s.head_times) == len(s.intra_times) == len(s.inter_times)
        assert all(a <= d for a, d in zip(s.intra_times, s.inter_times))
        assert all(v >= 1 for v in s.intra_times + s.inter_times)
        if s:
            assert s.inter_times[-1] == s.intra_times[-1]
        spans = [(t, t + a) for t, a in zip(s.head_times, s.intra_times)]
        for u in spans:
            for v in spans:
                assert u == v or not (u[0] <= v[0] and v[1] <= u[1])
    for i in items:
        s = minimal_occurrences(h, Sequence({i}, {i}))
        assert s.intra_times == s.inter_times


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(1, 30), min_size=0, max_size=20),
    st.integers(1, 30),
    st.integers(1, 5),
)
def test_periods_are_disjoint_maximal_runs(deltas, dmax, qmin):
    times = tuple(sum(deltas[:j]) for j in range(len(deltas)))
    stats = OccurrenceStats(times, tuple(deltas), tuple(deltas))
    ps = detect_periods(stats, dmax, qmin)
    assert [list(p.indices) for p in ps] == brute_periods(deltas, dmax, qmin)
    flat = [j for p in ps for j in p.indices]
    assert flat == sorted(set(flat))
    for p in ps:
        assert p.support >= qmin
        assert list(p.indices) == list(range(p.indices[0], p.indices[-1] + 1))
        assert all(deltas[j] <= dmax for j in p.indices)
        before, after = p.indices[0] - 1, p.indices[-1] + 1
        assert before < 0 or deltas[before] > dmax
        assert after >= len(deltas) or deltas[after] > dmax
