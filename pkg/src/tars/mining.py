"""TARS extraction for one customer.

Pipeline: enumerate the length-2 ("base") sequences, estimate a threshold
triple for each, keep the base sequences that recur under their own
triple, then grow longer sequences in a prefix tree whose nodes carry the
full occurrence statistics.  A node is emitted when it recurs under the
median of its base pairs' triples.  Recurrence is not anti-monotone, so
that check is made at every node and never used to stop growth; growth
stops only on support, which is.
"""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Iterator, Sequence as Seq, TextIO

from .data import Dataset, PurchaseHistory
from .estimation import (
    EstimationTrace,
    ParameterTriple,
    aggregate,
    estimate_parameters,
    fixed_parameters,
)
from .occurrence import (
    OccurrenceStats,
    Period,
    Sequence,
    detect_periods,
    median_period_support,
    stats_from_indices,
)

DEFAULT_MAX_LEN = 4


@dataclass(frozen=True)
class Tars:
    sequence: Sequence
    a1: int
    a2: int
    p: int
    q: float
    periods: tuple[Period, ...] = field(default=(), compare=False, repr=False)

    @property
    def head(self) -> frozenset[int]:
        return self.sequence.head

    @property
    def tail(self) -> frozenset[int]:
        return self.sequence.tail

    def to_dict(self) -> dict:
        return {
            "head": sorted(self.head),
            "tail": sorted(self.tail),
            "a1": self.a1,
            "a2": self.a2,
            "p": self.p,
            "q": self.q,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tars:
        return cls(Sequence(d["head"], d["tail"]), int(d["a1"]), int(d["a2"]), int(d["p"]), float(d["q"]))

    def render(self, label: Callable[[int], str] = str) -> str:
        h = ",".join(label(i) for i in sorted(self.head))
        t = ",".join(label(i) for i in sorted(self.tail))
        return f"{{{h}}} --({self.a1},{self.a2})-->[p={self.p:.2f},q={self.q:.2f}] {{{t}}}"


def annotate(sequence: Sequence, stats: OccurrenceStats, periods: Seq[Period]) -> Tars:
    """Build the TARS of ``sequence`` from its periods.

    The intra-time range only looks at occurrences inside some period.
    """
    if not periods:
        raise ValueError(f"{sequence}: cannot annotate without periods")
    intra = [stats.intra_times[j] for p in periods for j in p.indices]
    q = median_period_support(periods)
    return Tars(sequence, min(intra), max(intra), len(periods), float(q), tuple(periods))


@dataclass
class TarsSet:
    customer_id: str
    tars: list[Tars]
    triples: dict[Sequence, ParameterTriple] = field(default_factory=dict)
    trace: EstimationTrace | None = None

    def __len__(self) -> int:
        return len(self.tars)

    def __iter__(self) -> Iterator[Tars]:
        return iter(self.tars)

    def sequences(self) -> set[Sequence]:
        return {t.sequence for t in self.tars}

    def dump(self, stream: TextIO) -> None:
        for t in self.tars:
            stream.write(json.dumps(t.to_dict()) + "\n")

    def dumps(self) -> str:
        return "".join(json.dumps(t.to_dict()) + "\n" for t in self.tars)

    @classmethod
    def load(cls, stream: Iterable[str], customer_id: str = "") -> TarsSet:
        tars = [Tars.from_dict(json.loads(line)) for line in stream if line.strip()]
        return cls(customer_id, tars)


# -- base sequences ----------------------------------------------------------

def _item_index(history: PurchaseHistory) -> dict[int, list[int]]:
    idx: dict[int, list[int]] = {}
    for j, b in enumerate(history.baskets):
        for i in b.items:
            idx.setdefault(i, []).append(j)
    return idx


def extract_base_sequences(history: PurchaseHistory) -> list[tuple[Sequence, OccurrenceStats]]:
    """All ``{x} -> {y}`` (``x == y`` allowed) with at least one minimal occurrence."""
    times = history.times
    idx = _item_index(history)
    out = []
    for x in sorted(idx):
        for y in sorted(idx):
            st = stats_from_indices(times, idx[x], idx[y])
            if st:
                out.append((Sequence({x}, {y}), st))
    return out


def is_recurring(stats: OccurrenceStats, triple: ParameterTriple) -> bool:
    return len(detect_periods(stats, triple.dmax, triple.qmin)) >= triple.pmin


def filter_recurring(
    base: Seq[tuple[Sequence, OccurrenceStats]], triples: dict[Sequence, ParameterTriple]
) -> list[tuple[Sequence, OccurrenceStats]]:
    return [(s, st) for s, st in base if is_recurring(st, triples[s])]


# -- TARS-tree ---------------------------------------------------------------

def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass
class TarsNode:
    sequence: Sequence
    stats: OccurrenceStats
    triple: ParameterTriple
    periods: list[Period]
    head_order: tuple[int, ...]  # head items in growth order
    tail_order: tuple[int, ...]
    head_mask: int = field(repr=False, default=0)
    tail_mask: int = field(repr=False, default=0)
    children: list[TarsNode] = field(default_factory=list, repr=False)

    @property
    def support(self) -> int:
        return self.stats.support

    @property
    def recurring(self) -> bool:
        return bool(self.periods) and len(self.periods) >= self.triple.pmin


@dataclass
class TarsTree:
    roots: list[TarsNode] = field(default_factory=list)

    def __iter__(self) -> Iterator[TarsNode]:
        stack = list(reversed(self.roots))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def __len__(self) -> int:
        return sum(1 for _ in self)

    def find(self, sequence: Sequence) -> TarsNode | None:
        for node in self:
            if node.sequence == sequence:
                return node
        return None


def build_tars_tree(
    history: PurchaseHistory,
    base_recurring: Seq[tuple[Sequence, OccurrenceStats]],
    triples: dict[Sequence, ParameterTriple],
    max_len: int = DEFAULT_MAX_LEN,
) -> TarsTree:
    """Grow candidate sequences whose every base pair is base recurring.

    Each candidate ``X -> Y`` is reached along exactly one path: start from
    ``{first x} -> {first y}``, add the remaining head items, then the
    remaining tail items, always in item-rank order (basket count
    descending, then id).  A subtree is cut when the node's support is
    below the smallest ``qmin`` any base triple carries; support never
    grows along a path, so nothing below could form a period.
    """
    if not base_recurring:
        return TarsTree()
    times = history.times
    sup = history.item_support()
    rank = {i: r for r, i in enumerate(sorted(sup, key=lambda i: (-sup[i], i)))}
    masks: dict[int, int] = {}
    for j, b in enumerate(history.baskets):
        for i in b.items:
            masks[i] = masks.get(i, 0) | (1 << j)

    pairs = {(next(iter(s.head)), next(iter(s.tail))) for s, _ in base_recurring}
    heads_of: dict[int, set[int]] = {}
    tails_of: dict[int, set[int]] = {}
    for x, y in pairs:
        heads_of.setdefault(y, set()).add(x)
        tails_of.setdefault(x, set()).add(y)
    floor = max(1.0, min(triples[s].qmin for s, _ in base_recurring))

    def make(head_order, tail_order, hmask, tmask) -> TarsNode:
        seq = Sequence(head_order, tail_order)
        st = stats_from_indices(times, _bits(hmask), _bits(tmask))
        tr = aggregate([triples[s] for s in seq.base_pairs()])
        ps = detect_periods(st, tr.dmax, tr.qmin) if st else []
        return TarsNode(seq, st, tr, ps, head_order, tail_order, hmask, tmask)

    def grow(node: TarsNode) -> None:
        if len(node.sequence) >= max_len or node.support < floor:
            return
        # head extensions only while the tail is still a single item
        if len(node.tail_order) == 1:
            last = rank[node.head_order[-1]]
            cands = set.intersection(*(heads_of[y] for y in node.tail_order))
            for x in sorted(cands, key=rank.__getitem__):
                if rank[x] > last:
                    node.children.append(
                        make(node.head_order + (x,), node.tail_order, node.head_mask & masks[x], node.tail_mask)
                    )
        last = rank[node.tail_order[-1]]
        cands = set.intersection(*(tails_of[x] for x in node.head_order))
        for y in sorted(cands, key=rank.__getitem__):
            if rank[y] > last:
                node.children.append(
                    make(node.head_order, node.tail_order + (y,), node.head_mask, node.tail_mask & masks[y])
                )
        for child in node.children:
            grow(child)

    tree = TarsTree()
    for x, y in sorted(pairs, key=lambda p: (rank[p[0]], rank[p[1]])):
        node = make((x,), (y,), masks[x], masks[y])
        tree.roots.append(node)
        grow(node)
    return tree


def extract_tars_from_tree(tree: TarsTree) -> list[Tars]:
    seen: set[Sequence] = set()
    out = []
    for node in tree:
        if node.recurring and node.sequence not in seen:
            seen.add(node.sequence)
            out.append(annotate(node.sequence, node.stats, node.periods))
    out.sort(key=lambda t: t.sequence.key)
    return out


def extract_tars(
    history: PurchaseHistory,
    max_len: int = DEFAULT_MAX_LEN,
    fixed: ParameterTriple | None = None,
) -> TarsSet:
    """Mine the TARS of one customer.

    ``fixed`` bypasses estimation and applies one triple to every base
    sequence.
    """
    base = extract_base_sequences(history)
    if not base:
        return TarsSet(history.customer_id, [])
    if fixed is not None:
        triples, trace = fixed_parameters(base, fixed), None
    else:
        triples, trace = estimate_parameters(base)
    recurring = filter_recurring(base, triples)
    tree = build_tars_tree(history, recurring, triples, max_len)
    return TarsSet(history.customer_id, extract_tars_from_tree(tree), triples, trace)


def _mine_one(history: PurchaseHistory, max_len: int, fixed: ParameterTriple | None) -> TarsSet:
    return extract_tars(history, max_len=max_len, fixed=fixed)


def mine_dataset(
    dataset: Dataset | Iterable[PurchaseHistory],
    max_len: int = DEFAULT_MAX_LEN,
    fixed: ParameterTriple | None = None,
    jobs: int = 1,
) -> dict[str, TarsSet]:
    """Mine every customer; results keyed and ordered by customer id."""
    histories = list(dataset)
    fn = partial(_mine_one, max_len=max_len, fixed=fixed)
    if jobs <= 1 or len(histories) <= 1:
        results = [fn(h) for h in histories]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(fn, histories, chunksize=max(1, len(histories) // (4 * jobs))))
    return {r.customer_id: r for r in results}


def coverage_table(models: dict[str, TarsSet]) -> list[dict]:
    """Sequences ranked by how many customers hold them, with median annotations."""
    groups: dict[Sequence, list[Tars]] = {}
    for ts in models.values():
        for t in ts:
            groups.setdefault(t.sequence, []).append(t)
    rows = []
    for seq, ts in groups.items():
        rows.append({
            "sequence": seq,
            "customers": len(ts),
            "coverage": len(ts) / max(1, len(models)),
            "a1": statistics.median(t.a1 for t in ts),
            "a2": statistics.median(t.a2 for t in ts),
            "p": statistics.median(t.p for t in ts),
            "q": statistics.median(t.q for t in ts),
        })
    rows.sort(key=lambda r: (-r["customers"], r["sequence"].key))
    return rows
