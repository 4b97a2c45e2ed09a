"""User-centric reference predictors: most frequent, last basket, Markov chain."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .data import DataError, PurchaseHistory


def _by_frequency(sup: dict[int, int]) -> list[int]:
    return sorted(sup, key=lambda i: (-sup[i], i))


def predict_top(history: PurchaseHistory, k: int) -> list[int]:
    if k < 1:
        raise ValueError("k must be >= 1")
    return _by_frequency(history.item_support())[:k]


def predict_lst(history: PurchaseHistory, k: int) -> list[int]:
    """The last basket, cut to its ``k`` most frequent items; never padded."""
    sup = history.item_support()
    last = history.baskets[-1].items
    return sorted(last, key=lambda i: (-sup[i], i))[:k]


@dataclass
class TransitionModel:
    counts: dict[tuple[int, int], int] = field(default_factory=dict)
    row_totals: dict[int, int] = field(default_factory=dict)

    @classmethod
    def fit(cls, history: PurchaseHistory) -> TransitionModel:
        m = cls()
        bs = history.baskets
        for prev, cur in zip(bs, bs[1:]):
            for i in prev.items:
                for j in cur.items:
                    m.counts[(i, j)] = m.counts.get((i, j), 0) + 1
                m.row_totals[i] = m.row_totals.get(i, 0) + len(cur.items)
        return m

    def prob(self, i: int, j: int) -> Fraction:
        tot = self.row_totals.get(i, 0)
        return Fraction(self.counts.get((i, j), 0), tot) if tot else Fraction(0)

    def row(self, i: int) -> dict[int, Fraction]:
        tot = self.row_totals.get(i, 0)
        return {j: Fraction(c, tot) for (a, j), c in self.counts.items() if a == i}

    def scores(self, last: frozenset[int]) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for i in last:
            for j, p in self.row(i).items():
                out[j] = out.get(j, Fraction(0)) + p
        n = len(last)
        return {j: s / n for j, s in out.items()}


def rank_mc(model: TransitionModel, history: PurchaseHistory, k: int) -> list[int]:
    sup = history.item_support()
    scores = model.scores(history.baskets[-1].items)
    return sorted(sup, key=lambda j: (-scores.get(j, 0), -sup[j], j))[:k]


def predict_mc(history: PurchaseHistory, k: int) -> list[int]:
    """Mix the transition rows of the last basket's items, uniformly."""
    if len(history) < 2:
        raise DataError(f"customer {history.customer_id}: Markov chain needs >= 2 baskets")
    return rank_mc(TransitionModel.fit(history), history, k)
