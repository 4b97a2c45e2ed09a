"""Minimal occurrences of head -> tail sequences, and their periods.

An occurrence of ``X -> Y`` is a pair of baskets ``(t_h, t_l)`` with
``X`` in the first, ``Y`` in the second and ``t_h < t_l``.  Only minimal
occurrences count: no other occurrence of the same sequence fits inside
``[t_h, t_l]``.  Equivalently, ``t_l`` is the first ``Y`` basket after
``t_h`` and no ``X`` basket lies strictly between them, which is what
:func:`minimal_occurrences` scans for in a single pass.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence as Seq

from .data import PurchaseHistory


@dataclass(frozen=True, order=False)
class Sequence:
    head: frozenset[int]
    tail: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "head", frozenset(self.head))
        object.__setattr__(self, "tail", frozenset(self.tail))
        if not self.head or not self.tail:
            raise ValueError("head and tail must be non-empty")

    def __len__(self) -> int:
        return len(self.head) + len(self.tail)

    @property
    def key(self) -> tuple:
        """Total order used wherever output must be deterministic."""
        return (len(self), tuple(sorted(self.head)), tuple(sorted(self.tail)))

    def base_pairs(self) -> list[Sequence]:
        return [Sequence({x}, {y}) for x in sorted(self.head) for y in sorted(self.tail)]

    def __str__(self) -> str:
        h = ",".join(map(str, sorted(self.head)))
        t = ",".join(map(str, sorted(self.tail)))
        return f"{{{h}}}->{{{t}}}"


@dataclass(frozen=True)
class OccurrenceStats:
    head_times: tuple[int, ...] = ()
    intra_times: tuple[int, ...] = ()
    inter_times: tuple[int, ...] = ()

    @property
    def support(self) -> int:
        return len(self.head_times)

    def __bool__(self) -> bool:
        return bool(self.head_times)


@dataclass(frozen=True)
class Period:
    indices: tuple[int, ...]  # positions into the owning head-time list
    times: tuple[int, ...]

    @property
    def support(self) -> int:
        return len(self.times)


def is_subsequence(s1: Sequence, s2: Sequence) -> bool:
    return s1.head <= s2.head and s1.tail <= s2.tail


def stats_from_indices(times: Seq[int], heads: Seq[int], tails: Seq[int]) -> OccurrenceStats:
    """Minimal occurrences given ascending basket indices containing head/tail.

    ``times[i]`` is the day of basket ``i``.
    """
    th: list[int] = []
    intra: list[int] = []
    li = 0
    n_tails = len(tails)
    for k, h in enumerate(heads):
        while li < n_tails and tails[li] <= h:
            li += 1
        if li == n_tails:
            break
        tl = tails[li]
        if k + 1 < len(heads) and heads[k + 1] < tl:
            continue  # a later head sits inside (h, tl): not minimal
        th.append(times[h])
        intra.append(times[tl] - times[h])
    if not th:
        return OccurrenceStats()
    inter = [b - a for a, b in zip(th, th[1:])]
    inter.append(intra[-1])
    return OccurrenceStats(tuple(th), tuple(intra), tuple(inter))


def minimal_occurrences(history: PurchaseHistory, sequence: Sequence) -> OccurrenceStats:
    times = history.times
    heads = [i for i, b in enumerate(history.baskets) if sequence.head <= b.items]
    tails = [i for i, b in enumerate(history.baskets) if sequence.tail <= b.items]
    return stats_from_indices(times, heads, tails)


def detect_periods(stats: OccurrenceStats, dmax: float, qmin: float) -> list[Period]:
    """Maximal runs of head times whose inter-times are all within ``dmax``.

    Runs shorter than ``qmin`` are dropped.
    """
    periods = []
    run: list[int] = []
    for j, d in enumerate(stats.inter_times):
        if d <= dmax:
            run.append(j)
            continue
        if run and len(run) >= qmin:
            periods.append(run)
        run = []
    if run and len(run) >= qmin:
        periods.append(run)
    return [Period(tuple(r), tuple(stats.head_times[j] for j in r)) for r in periods]


def recurrence(periods: Iterable[Period]) -> int:
    return sum(1 for _ in periods)


def median_period_support(periods: Seq[Period]) -> float:
    if not periods:
        raise ValueError("median of an empty period list")
    return statistics.median(p.support for p in periods)
