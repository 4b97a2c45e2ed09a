"""Customers, baskets and purchase histories.

Histories are user-centric: each customer's baskets are kept in their own
time-ordered list, with times expressed as integer day offsets.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, TextIO


class DataError(ValueError):
    """Raised on malformed or unusable transaction data."""


@dataclass(frozen=True)
class Item:
    id: int
    label: str | None = None


@dataclass(frozen=True)
class Basket:
    time: int
    items: frozenset[int]

    def __post_init__(self):
        if not isinstance(self.items, frozenset):
            object.__setattr__(self, "items", frozenset(self.items))
        if not self.items:
            raise DataError(f"empty basket at day {self.time}")

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class PurchaseHistory:
    customer_id: str
    baskets: tuple[Basket, ...]

    def __post_init__(self):
        baskets = tuple(self.baskets)
        object.__setattr__(self, "baskets", baskets)
        if not baskets:
            raise DataError(f"customer {self.customer_id}: empty history")
        for prev, cur in zip(baskets, baskets[1:]):
            if cur.time <= prev.time:
                raise DataError(
                    f"customer {self.customer_id}: basket times not strictly "
                    f"increasing ({prev.time} then {cur.time})"
                )

    def __len__(self) -> int:
        return len(self.baskets)

    def __iter__(self) -> Iterator[Basket]:
        return iter(self.baskets)

    @property
    def times(self) -> list[int]:
        return [b.time for b in self.baskets]

    @property
    def items(self) -> set[int]:
        out: set[int] = set()
        for b in self.baskets:
            out |= b.items
        return out

    def item_support(self) -> dict[int, int]:
        """Number of baskets containing each item."""
        sup: dict[int, int] = {}
        for b in self.baskets:
            for i in b.items:
                sup[i] = sup.get(i, 0) + 1
        return sup

    def head(self, n: int) -> PurchaseHistory:
        return PurchaseHistory(self.customer_id, self.baskets[:n])


def customer_sort_key(cid: str):
    return (0, int(cid), "") if cid.isdigit() else (1, 0, cid)


@dataclass(frozen=True)
class Dataset:
    histories: Mapping[str, PurchaseHistory]
    items: Mapping[int, Item] = field(default_factory=dict)

    def __post_init__(self):
        ordered = {
            cid: self.histories[cid]
            for cid in sorted(self.histories, key=customer_sort_key)
        }
        object.__setattr__(self, "histories", ordered)
        known = dict(self.items)
        for h in ordered.values():
            for b in h.baskets:
                for i in b.items:
                    if i not in known:
                        known[i] = Item(i)
        object.__setattr__(self, "items", dict(sorted(known.items())))

    def __len__(self) -> int:
        return len(self.histories)

    def __iter__(self) -> Iterator[PurchaseHistory]:
        return iter(self.histories.values())

    def __getitem__(self, cid: str) -> PurchaseHistory:
        return self.histories[cid]

    def label(self, item: int) -> str:
        it = self.items.get(item)
        return it.label if it is not None and it.label is not None else str(item)


# -- ingestion ---------------------------------------------------------------

def _parse_day(token: str, lineno: int):
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return dt.date.fromisoformat(token)
    except ValueError:
        raise DataError(f"line {lineno}: cannot parse day {token!r}") from None


def _build(rows: list[tuple[str, object, list[str], int]]) -> Dataset:
    if not rows:
        raise DataError("empty input: no transactions")

    kinds = {type(day) for _, day, _, _ in rows}
    if len(kinds) > 1:
        raise DataError("mixed calendar dates and integer day indices")
    if dt.date in kinds:
        epoch = min(day for _, day, _, _ in rows)
        to_day = lambda d: (d - epoch).days  # noqa: E731
    else:
        to_day = lambda d: d  # noqa: E731

    tokens = {t for _, _, toks, _ in rows for t in toks}
    next_id = max((int(t) for t in tokens if t.isdigit()), default=-1) + 1
    labels = {lab: next_id + n for n, lab in enumerate(sorted(t for t in tokens if not t.isdigit()))}
    items = {i: Item(i, lab) for lab, i in labels.items()}

    def resolve(token: str) -> int:
        return int(token) if token.isdigit() else labels[token]

    grouped: dict[str, dict[int, set[int]]] = {}
    for cid, day, toks, lineno in rows:
        ids = {resolve(t) for t in toks}
        if not ids:
            raise DataError(f"line {lineno}: no items")
        grouped.setdefault(cid, {}).setdefault(to_day(day), set()).update(ids)

    histories = {
        cid: PurchaseHistory(cid, tuple(Basket(t, frozenset(s)) for t, s in sorted(days.items())))
        for cid, days in grouped.items()
    }
    return Dataset(histories, items)


def _csv_rows(stream: TextIO):
    rows = []
    for lineno, rec in enumerate(csv.reader(stream), start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != 3:
            raise DataError(f"line {lineno}: expected 3 fields, got {len(rec)}")
        cid, day, item = (c.strip() for c in rec)
        if lineno == 1 and cid.lower() in ("customer_id", "customer") and day.lower() in ("day", "date"):
            continue
        if not cid or not item:
            raise DataError(f"line {lineno}: missing customer or item")
        if item.startswith("-"):
            raise DataError(f"line {lineno}: negative item id {item!r}")
        rows.append((cid, _parse_day(day, lineno), [item], lineno))
    return rows


def _jsonl_rows(stream: TextIO):
    rows = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            cid, day, its = rec["customer"], rec["day"], rec["items"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"line {lineno}: malformed record ({exc})") from None
        if not isinstance(its, list) or not its:
            raise DataError(f"line {lineno}: items must be a non-empty list")
        toks = [str(i) for i in its]
        if any(t.startswith("-") for t in toks):
            raise DataError(f"line {lineno}: negative item id")
        rows.append((str(cid), _parse_day(str(day), lineno), toks, lineno))
    return rows


def parse_transactions(stream: TextIO | str, format: str = "csv") -> Dataset:
    """Read transactions and group them into per-customer histories.

    CSV rows are ``customer_id,day,item_id`` (optional header); JSON-lines
    records are ``{"customer": c, "day": t, "items": [...]}``.  Days may be
    integers or ISO dates; dates become offsets from the earliest date in
    the input.  Rows sharing (customer, day) are merged into one basket.
    Non-numeric item tokens are labels; they get ids above the largest
    numeric id, in sorted label order.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    if format == "csv":
        rows = _csv_rows(stream)
    elif format in ("jsonl", "json-lines", "json"):
        rows = _jsonl_rows(stream)
    else:
        raise ValueError(f"unknown format {format!r}")
    return _build(rows)


def guess_format(path: str) -> str:
    return "jsonl" if path.endswith((".jsonl", ".json", ".ndjson")) else "csv"


def load_dataset(path: str) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_transactions(fh, guess_format(path))


def _token(dataset: Dataset, item: int):
    it = dataset.items.get(item)
    return it.label if it is not None and it.label is not None else item


def serialize_dataset(dataset: Dataset, stream: TextIO, format: str = "csv") -> None:
    """Write ``dataset`` in a form :func:`parse_transactions` reads back identically."""
    if format == "csv":
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["customer_id", "day", "item_id"])
        for h in dataset:
            for b in h.baskets:
                for i in sorted(b.items):
                    w.writerow([h.customer_id, b.time, _token(dataset, i)])
    else:
        for h in dataset:
            for b in h.baskets:
                its = [_token(dataset, i) for i in sorted(b.items)]
                rec = {"customer": h.customer_id, "day": b.time, "items": its}
                stream.write(json.dumps(rec) + "\n")


def dumps_dataset(dataset: Dataset, format: str = "csv") -> str:
    buf = io.StringIO()
    serialize_dataset(dataset, buf, format)
    return buf.getvalue()


# -- filtering and splitting -------------------------------------------------

def filter_min_baskets(dataset: Dataset, min_count: int) -> Dataset:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    kept = {cid: h for cid, h in dataset.histories.items() if len(h) >= min_count}
    return Dataset(kept, dataset.items)


def split_leave_one_out(history: PurchaseHistory) -> tuple[PurchaseHistory, Basket]:
    if len(history) < 2:
        raise DataError(f"customer {history.customer_id}: need >= 2 baskets for leave-one-out")
    return history.head(len(history) - 1), history.baskets[-1]


def split_fraction(
    history: PurchaseHistory,
    fraction: float | tuple[float, float],
    rng: random.Random | None = None,
) -> tuple[PurchaseHistory, list[Basket]]:
    """Chronological prefix split.

    With ``rng`` given, ``fraction`` is a ``(lo, hi)`` range and the actual
    fraction is drawn uniformly from it.
    """
    if rng is not None:
        lo, hi = fraction if isinstance(fraction, tuple) else (fraction, fraction)
        if not (0 < lo <= hi < 1):
            raise ValueError(f"fraction range must lie in (0, 1), got {(lo, hi)}")
        frac = rng.uniform(lo, hi)
    else:
        frac = fraction
        if isinstance(frac, tuple) or not (0 < frac < 1):
            raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n_train = math.floor(frac * len(history))
    if n_train < 1:
        raise DataError(f"customer {history.customer_id}: fraction leaves no training basket")
    return history.head(n_train), list(history.baskets[n_train:])


def from_baskets(customer_id: str, baskets: Iterable[tuple[int, Iterable[int]]]) -> PurchaseHistory:
    """Build a history from ``(day, items)`` pairs, merging same-day baskets."""
    days: dict[int, set[int]] = {}
    for t, its in baskets:
        days.setdefault(int(t), set()).update(its)
    return PurchaseHistory(customer_id, tuple(Basket(t, frozenset(s)) for t, s in sorted(days.items())))
