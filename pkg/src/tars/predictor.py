"""TBP: next-basket prediction from a customer's mined TARS."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .data import PurchaseHistory
from .mining import Tars


def staleness_window(t: Tars) -> float:
    # q occurrences each at most a2 apart bound the span of one period
    return t.q * t.a2


@dataclass
class ActiveScanState:
    active: dict[Tars, int] = field(default_factory=dict)  # TARS -> Q
    candidates: set[Tars] = field(default_factory=set)
    last_seen: dict[Tars, int] = field(default_factory=dict)


class _HeadIndex:
    """TARS bucketed by their smallest head item, for basket-pair probing."""

    def __init__(self, tars: Iterable[Tars]):
        self.buckets: dict[int, list[Tars]] = {}
        for t in sorted(tars, key=lambda t: t.sequence.key):
            self.buckets.setdefault(min(t.head), []).append(t)

    def matches(self, prev: frozenset[int], cur: frozenset[int], gap: int) -> list[Tars]:
        out = []
        for i in sorted(prev):
            for t in self.buckets.get(i, ()):
                if t.a1 <= gap <= t.a2 and t.head <= prev and t.tail <= cur:
                    out.append(t)
        return out


def get_active_tars(
    history: PurchaseHistory, tars: Iterable[Tars], next_time: int | None = None
) -> tuple[list[Tars], dict[Tars, int]]:
    """Scan consecutive basket pairs newest-first and collect the active TARS.

    A TARS matches a pair when its head is in the older basket, its tail in
    the newer one and the gap lies in its intra-time range.  The first
    match activates it with count 1.  A later match farther back than its
    staleness window from the previous one stops the search for it (it
    stays active); otherwise the count grows and once it exceeds ``q`` the
    TARS is dropped.  ``next_time`` is accepted and ignored.
    """
    del next_time
    tars = list(tars)
    index = _HeadIndex(tars)
    st = ActiveScanState(candidates=set(tars))
    bs = history.baskets
    for j in range(len(bs) - 1, 0, -1):
        if not st.candidates:
            break
        prev, cur = bs[j - 1], bs[j]
        for t in index.matches(prev.items, cur.items, cur.time - prev.time):
            if t not in st.candidates:
                continue
            if t not in st.active:
                st.active[t] = 1
                st.last_seen[t] = prev.time
            elif st.last_seen[t] - prev.time > staleness_window(t):
                st.candidates.discard(t)
            else:
                st.active[t] += 1
                st.last_seen[t] = prev.time
                if st.active[t] > t.q:
                    del st.active[t]
                    st.candidates.discard(t)
    active = sorted(st.active, key=lambda t: t.sequence.key)
    return active, {t: st.active[t] for t in active}


def calculate_item_scores(
    history: PurchaseHistory, active: Iterable[Tars], counts: dict[Tars, int]
) -> dict[int, float]:
    scores: dict[int, float] = {}
    for t in active:
        for i in t.tail:
            scores[i] = scores.get(i, 0.0) + (t.q - counts[t])
    sup = history.item_support()
    for i in scores:
        scores[i] += sup.get(i, 0)
    return scores


@dataclass
class Prediction:
    items: list[int]
    scores: list[float]
    n_active: int


def rank_items(scores: dict[int, float], sup: dict[int, int], k: int) -> list[int]:
    """Top ``k`` positive-score items, padded with the most frequent others."""
    ranked = sorted((i for i, s in scores.items() if s > 0), key=lambda i: (-scores[i], -sup.get(i, 0), i))
    chosen = ranked[:k]
    if len(chosen) < k:
        taken = set(chosen)
        for i in sorted(sup, key=lambda i: (-sup[i], i)):
            if len(chosen) == k:
                break
            if i not in taken:
                chosen.append(i)
    return chosen


def predict(history: PurchaseHistory, tars: Iterable[Tars], k: int) -> Prediction:
    if k < 1:
        raise ValueError("k must be >= 1")
    active, counts = get_active_tars(history, tars)
    scores = calculate_item_scores(history, active, counts)
    items = rank_items(scores, history.item_support(), k)
    return Prediction(items, [scores.get(i, 0.0) for i in items], len(active))


def predict_basket(history: PurchaseHistory, tars: Iterable[Tars], k: int) -> list[int]:
    return predict(history, tars, k).items


def personalized_k(history: PurchaseHistory) -> int:
    """Average basket size, rounded half up, at least 1."""
    total = sum(len(b) for b in history.baskets)
    n = len(history)
    return max(1, (2 * total + n) // (2 * n))
