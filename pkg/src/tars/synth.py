"""Synthetic purchase histories with planted recurring sequences.

Each customer receives a few pattern specs from a pool.  A pattern is
bought in bursts ("periods"): a run of trips, each holding the pattern's
head and tail items, spaced by gaps drawn from the pattern's intra-time
range.  Consecutive trips of a run are then occurrences of the planted
``head -> tail`` sequence.  The periods of one customer's patterns take
turns in round-robin time slots, the way seasonal products do, so the
gaps between periods are long.  Noise items from a Zipf-weighted pool are
sprinkled into every basket.

Three presets cover the evaluation corpora: ``STAPLES`` (short cadences,
the default), ``HETEROGENEOUS`` (cadences from days to a month) and
``STATIONARY`` (one pattern bought steadily all year).
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import Basket, Dataset, Item, PurchaseHistory

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class InfeasibleSpec(ValueError):
    pass


@dataclass(frozen=True)
class PatternSpec:
    head: tuple[int, ...]
    tail: tuple[int, ...]
    intra_min: int
    intra_max: int
    occurrences: int = 6
    periods: int = 4
    period_length: int = 0  # days; 0 sizes the period from the draws

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(sorted(self.head)))
        object.__setattr__(self, "tail", tuple(sorted(self.tail)))
        if not self.head or not self.tail:
            raise InfeasibleSpec("pattern needs a non-empty head and tail")
        if self.intra_min < 1 or self.intra_max < self.intra_min:
            raise InfeasibleSpec(f"bad intra-time range {self.intra_min}..{self.intra_max}")
        if self.occurrences < 1 or self.periods < 1 or self.period_length < 0:
            raise InfeasibleSpec("occurrences and periods must be >= 1")
        if self.period_length and self.period_length < self.occurrences * self.intra_min:
            raise InfeasibleSpec(
                f"period length {self.period_length} < {self.occurrences} occurrences "
                f"x {self.intra_min} days"
            )

    @property
    def items(self) -> frozenset[int]:
        return frozenset(self.head) | frozenset(self.tail)


@dataclass(frozen=True)
class SyntheticConfig:
    customers: int = 100
    horizon: int = 364
    patterns: tuple[PatternSpec, ...] = ()
    patterns_per_customer: int = 0  # 0 = every pattern in the pool
    noise_rate: float = 0.2
    noise_pool: int = 500
    noise_offset: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        if self.customers < 0 or self.horizon < 1:
            raise InfeasibleSpec("customers must be >= 0 and horizon >= 1")
        if not 0 <= self.noise_rate < 1:
            raise InfeasibleSpec("noise_rate must lie in [0, 1)")
        if self.patterns_per_customer > len(self.patterns):
            raise InfeasibleSpec("patterns_per_customer exceeds the pattern pool")
        if self.noise_rate > 0 and self.noise_pool < 1:
            raise InfeasibleSpec("noise requires a non-empty noise pool")
        planted = set().union(*(p.items for p in self.patterns)) if self.patterns else set()
        if self.noise_rate > 0 and any(
            self.noise_offset <= i < self.noise_offset + self.noise_pool for i in planted
        ):
            raise InfeasibleSpec("noise item ids overlap planted items")

    @classmethod
    def from_dict(cls, d: dict) -> SyntheticConfig:
        d = dict(d)
        d["patterns"] = tuple(PatternSpec(**p) for p in d.get("patterns", ()))
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path: str) -> SyntheticConfig:
        if path.endswith(".toml"):
            with open(path, "rb") as fh:
                return cls.from_dict(tomllib.load(fh))
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


STAPLES_POOL = (
    PatternSpec((1,), (1,), 2, 3, occurrences=6, periods=4),
    PatternSpec((2,), (2,), 2, 3, occurrences=5, periods=4),
    PatternSpec((3,), (4,), 2, 3, occurrences=4, periods=4),
    PatternSpec((5,), (5,), 2, 3, occurrences=4, periods=4),
    PatternSpec((6,), (7,), 2, 3, occurrences=4, periods=4),
    PatternSpec((9,), (9,), 2, 3, occurrences=5, periods=4),
)

HETEROGENEOUS_POOL = (
    PatternSpec((1,), (1,), 2, 3, occurrences=5, periods=4),
    PatternSpec((2,), (2,), 6, 7, occurrences=4, periods=3),
    PatternSpec((3,), (4,), 16, 18, occurrences=3, periods=2),
    PatternSpec((5,), (5,), 20, 22, occurrences=3, periods=2),
    PatternSpec((6,), (7,), 27, 29, occurrences=2, periods=2),
    PatternSpec((9,), (9,), 16, 17, occurrences=4, periods=2),
)

STATIONARY_POOL = (
    PatternSpec((1,), (1,), 2, 3, occurrences=80, periods=1),
    PatternSpec((2,), (2,), 2, 3, occurrences=80, periods=1),
    PatternSpec((3,), (4,), 2, 3, occurrences=80, periods=1),
)

DEFAULT_POOL = STAPLES_POOL

PRESETS = {
    "staples": SyntheticConfig(patterns=STAPLES_POOL, patterns_per_customer=3),
    "heterogeneous": SyntheticConfig(patterns=HETEROGENEOUS_POOL, patterns_per_customer=3),
    # one steady pattern per customer; several would take turns and make
    # the per-step curves depend on where the holdout falls in the rotation
    "stationary": SyntheticConfig(
        customers=300, horizon=245, patterns=STATIONARY_POOL, patterns_per_customer=1
    ),
}


def preset(name: str, **overrides) -> SyntheticConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise InfeasibleSpec(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides)


@dataclass
class PlantedPeriod:
    pattern: int
    start: int
    occurrences: list[tuple[int, int]] = field(default_factory=list)  # (head day, tail day)


@dataclass
class GroundTruth:
    """What was planted for one customer."""

    patterns: list[int]
    periods: list[PlantedPeriod]


def _draw_gaps(spec: PatternSpec, rng: np.random.Generator) -> list[int]:
    """Days between the consecutive trips of one period."""
    gaps = [int(g) for g in rng.integers(spec.intra_min, spec.intra_max + 1, size=spec.occurrences)]
    if spec.period_length:
        total = sum(gaps)
        while total > spec.period_length:
            j = max(range(len(gaps)), key=lambda j: (gaps[j], -j))
            if gaps[j] == spec.intra_min:
                break
            gaps[j] -= 1
            total -= 1
    return gaps


def _span(spec: PatternSpec) -> int:
    return spec.period_length or spec.occurrences * spec.intra_max


def _customer(cfg: SyntheticConfig, cid: int, rng: np.random.Generator):
    pool = range(len(cfg.patterns))
    n_pat = cfg.patterns_per_customer or len(cfg.patterns)
    chosen = sorted(int(i) for i in rng.choice(len(pool), size=n_pat, replace=False)) if n_pat else []

    # round-robin slot layout in a random pattern order
    order = list(rng.permutation(chosen)) if chosen else []
    slots: list[int] = []
    remaining = {p: cfg.patterns[p].periods for p in order}
    while any(remaining.values()):
        for p in order:
            if remaining[p]:
                slots.append(int(p))
                remaining[p] -= 1
    slot_len = cfg.horizon / max(1, len(slots))

    days: dict[int, set[int]] = {}
    truth = GroundTruth(chosen, [])
    for s, p in enumerate(slots):
        spec = cfg.patterns[p]
        slack = max(0, int(slot_len) - _span(spec) - 1)
        t = int(s * slot_len) + int(rng.integers(0, slack + 1))
        per = PlantedPeriod(p, t)
        for g in _draw_gaps(spec, rng):
            days.setdefault(t, set()).update(spec.items)
            days.setdefault(t + g, set()).update(spec.items)
            per.occurrences.append((t, t + g))
            t += g
        truth.periods.append(per)

    noise_ids = np.arange(cfg.noise_offset, cfg.noise_offset + cfg.noise_pool)
    weights = 1.0 / np.arange(1, cfg.noise_pool + 1)
    weights /= weights.sum()
    lam_per_item = cfg.noise_rate / (1 - cfg.noise_rate)
    baskets = []
    for day in sorted(d for d in days if d < cfg.horizon):
        items = set(days[day])
        if lam_per_item > 0:
            n_noise = min(cfg.noise_pool, int(rng.poisson(lam_per_item * len(items))))
            if n_noise:
                items.update(int(i) for i in rng.choice(noise_ids, size=n_noise, replace=False, p=weights))
        baskets.append(Basket(day, frozenset(items)))
    return baskets, truth


def generate_synthetic(cfg: SyntheticConfig, with_truth: bool = False):
    """Generate a dataset; deterministic for a given config (seed included).

    With ``with_truth`` also returns ``{customer_id: GroundTruth}``.
    """
    root = np.random.SeedSequence(cfg.seed)
    histories = {}
    truths = {}
    for cid, child in enumerate(root.spawn(cfg.customers)):
        baskets, truth = _customer(cfg, cid, np.random.default_rng(child))
        if not baskets:
            continue
        key = str(cid)
        histories[key] = PurchaseHistory(key, tuple(baskets))
        truths[key] = truth
    items = {i: Item(i) for p in cfg.patterns for i in p.items}
    ds = Dataset(histories, items)
    return (ds, truths) if with_truth else ds
