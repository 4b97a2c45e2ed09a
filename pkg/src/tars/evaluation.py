"""Prediction metrics and the evaluation protocols.

Every protocol builds one task per customer, runs the tasks (optionally in
a process pool) and reduces the returned rows single-threaded, in customer
order, so reports do not depend on the degree of parallelism.
"""

from __future__ import annotations

import csv
import io
import json
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Iterable, Sequence as Seq

import numpy as np

from .baselines import TransitionModel, predict_lst, predict_top, rank_mc
from .data import Basket, Dataset, PurchaseHistory, split_fraction
from .estimation import ParameterTriple
from .mining import DEFAULT_MAX_LEN, extract_tars
from .predictor import personalized_k, predict

PERSONAL = "personal"


# -- metrics -----------------------------------------------------------------

def precision_recall_f1(actual: Iterable[int], predicted: Iterable[int]) -> tuple[float, float, float]:
    b, b_star = set(actual), set(predicted)
    if not b:
        raise ValueError("actual basket is empty")
    hits = len(b & b_star)
    if hits == 0:
        return 0.0, 0.0, 0.0
    p = hits / len(b_star)
    r = hits / len(b)
    return p, r, 2 * p * r / (p + r)


def hit(actual: Iterable[int], predicted: Iterable[int]) -> int:
    return int(bool(set(actual) & set(predicted)))


# -- methods -----------------------------------------------------------------

@dataclass(frozen=True)
class Method:
    """A predictor split into a training step and a prediction step.

    ``predict`` sees the model fitted on the training prefix plus the
    history observed so far, which may be longer than the prefix.
    """

    name: str

    def fit(self, train: PurchaseHistory):
        return None

    def predict(self, model, observed: PurchaseHistory, k: int) -> tuple[list[int], dict]:
        raise NotImplementedError


@dataclass(frozen=True)
class TbpMethod(Method):
    name: str = "tbp"
    fixed: ParameterTriple | None = None
    max_len: int = DEFAULT_MAX_LEN

    def fit(self, train):
        return extract_tars(train, max_len=self.max_len, fixed=self.fixed).tars

    def predict(self, model, observed, k):
        pr = predict(observed, model, k)
        return pr.items, {"n_tars": len(model), "n_active": pr.n_active}


@dataclass(frozen=True)
class TopMethod(Method):
    name: str = "top"

    def fit(self, train):
        return train

    def predict(self, model, observed, k):
        return predict_top(model, k), {}


@dataclass(frozen=True)
class LstMethod(Method):
    name: str = "lst"

    def predict(self, model, observed, k):
        return predict_lst(observed, k), {}


@dataclass(frozen=True)
class McMethod(Method):
    name: str = "mc"

    def fit(self, train):
        # one training basket has no transitions; predict nothing, score a miss
        return TransitionModel.fit(train) if len(train) >= 2 else None

    def predict(self, model, observed, k):
        return (rank_mc(model, observed, k) if model is not None else []), {}


def make_method(name: str, fixed: ParameterTriple | None = None, max_len: int = DEFAULT_MAX_LEN) -> Method:
    if name == "tbp":
        return TbpMethod("tbp" if fixed is None else "tbp-fixed", fixed, max_len)
    if name == "tbp-fixed":
        return TbpMethod("tbp-fixed", fixed or ParameterTriple(14, 3, 2), max_len)
    table = {"top": TopMethod, "lst": LstMethod, "mc": McMethod}
    if name not in table:
        raise ValueError(f"unknown method {name!r}")
    return table[name]()


def resolve_k(policy: int | str, train: PurchaseHistory) -> int:
    if policy == PERSONAL:
        return personalized_k(train)
    k = int(policy)
    if k < 1:
        raise ValueError("k must be >= 1")
    return k


# -- rows and reports --------------------------------------------------------

@dataclass(frozen=True)
class Outcome:
    customer: str
    method: str
    k_policy: str
    k: int
    step: int
    precision: float
    recall: float
    f1: float
    hit: int
    n_pred: int
    n_actual: int
    n_items: int = 0
    n_tars: int = -1
    n_active: int = -1


ROW_FIELDS = [f.name for f in fields(Outcome)]


def _score(customer, method, policy, k, step, actual: Basket, predicted: list[int], extra: dict, n_items=0):
    p, r, f = precision_recall_f1(actual.items, predicted)
    return Outcome(
        customer, method, str(policy), k, step, p, r, f, hit(actual.items, predicted),
        len(predicted), len(actual.items), n_items,
        extra.get("n_tars", -1), extra.get("n_active", -1),
    )


def _fmt(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def _percentiles(values: Seq[float]) -> dict[str, float]:
    qs = np.percentile(np.asarray(values, dtype=float), [10, 25, 50, 75, 90])
    return {f"p{p}": float(v) for p, v in zip((10, 25, 50, 75, 90), qs)}


@dataclass
class EvaluationReport:
    protocol: str
    rows: list[Outcome]
    metadata: dict = field(default_factory=dict)

    def groups(self) -> dict[tuple[str, str, int], list[Outcome]]:
        out: dict[tuple[str, str, int], list[Outcome]] = {}
        for r in self.rows:
            out.setdefault((r.method, r.k_policy, r.step), []).append(r)
        return out

    def summary(self) -> list[dict]:
        """One aggregate line per (method, k policy, step)."""
        lines = []
        for (method, policy, step), rs in self.groups().items():
            hits = [r for r in rs if r.hit]
            line = {
                "method": method,
                "k_policy": policy,
                "step": step,
                "n": len(rs),
                "precision": statistics.fmean(r.precision for r in rs),
                "recall": statistics.fmean(r.recall for r in rs),
                "f1": statistics.fmean(r.f1 for r in rs),
                "hit_ratio": statistics.fmean(r.hit for r in rs),
                "normalized_f1": statistics.fmean(r.f1 for r in hits) if hits else 0.0,
            }
            if self.protocol == "weeks":
                for name in ("f1", "n_items", "n_tars", "n_active"):
                    vals = [getattr(r, name) for r in rs]
                    if name in ("n_tars", "n_active") and min(vals) < 0:
                        continue
                    for key, v in _percentiles(vals).items():
                        line[f"{name}_{key}"] = v
            lines.append(line)
        lines.sort(key=lambda d: (d["method"], _policy_key(d["k_policy"]), d["step"]))
        return lines

    def mean_f1(self, method: str, k_policy: str | int = PERSONAL, step: int = 1) -> float:
        rs = self.groups().get((method, str(k_policy), step), [])
        return statistics.fmean(r.f1 for r in rs) if rs else float("nan")

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, f)) for f in ROW_FIELDS])
        return buf.getvalue()

    def summary_csv(self) -> str:
        lines = self.summary()
        cols: list[str] = []
        for line in lines:
            cols.extend(c for c in line if c not in cols)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for line in lines:
            w.writerow([_fmt(line[c]) if c in line else "" for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"protocol": self.protocol, "metadata": self.metadata, "summary": self.summary()}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_rows_csv(cls, protocol: str, text: str, metadata: dict | None = None) -> EvaluationReport:
        rows = []
        types = {f.name: f.type for f in fields(Outcome)}
        for rec in csv.DictReader(io.StringIO(text)):
            conv = {}
            for k, v in rec.items():
                t = types[k]
                conv[k] = float(v) if t == "float" else int(v) if t == "int" else v
            rows.append(Outcome(**conv))
        return cls(protocol, rows, metadata or {})


def _policy_key(policy: str):
    return (1, 0) if policy == PERSONAL else (0, int(policy))


# -- per-customer tasks ------------------------------------------------------

@dataclass(frozen=True)
class _Task:
    protocol: str
    history: PurchaseHistory
    methods: tuple[Method, ...]
    k_policies: tuple
    options: dict = field(default_factory=dict)


def _fit_all(methods, train):
    return [m.fit(train) for m in methods]


def _predict_all(task: _Task, models, train, observed, actual, step, n_items=0) -> list[Outcome]:
    rows = []
    for m, model in zip(task.methods, models):
        for policy in task.k_policies:
            k = resolve_k(policy, train)
            items, extra = m.predict(model, observed, k)
            rows.append(_score(task.history.customer_id, m.name, policy, k, step, actual, items, extra, n_items))
    return rows


def _run_loo(task: _Task) -> list[Outcome]:
    h = task.history
    train = h.head(len(h) - 1)
    models = _fit_all(task.methods, train)
    return _predict_all(task, models, train, train, h.baskets[-1], 1, len(train.items))


def _run_multistep(task: _Task) -> list[Outcome]:
    h = task.history
    train, holdout = split_fraction(h, task.options["train_fraction"])
    models = _fit_all(task.methods, train)
    rows = []
    for s, actual in enumerate(holdout[: task.options["horizon"]], start=1):
        observed = h.head(len(train) + s - 1)
        rows.extend(_predict_all(task, models, train, observed, actual, s, len(train.items)))
    return rows


def _run_subset(task: _Task) -> list[Outcome]:
    h = task.history
    rng = random.Random(f"{task.options['seed']}:{h.customer_id}")
    train, holdout = split_fraction(h, task.options["fraction_range"], rng)
    models = _fit_all(task.methods, train)
    return _predict_all(task, models, train, train, holdout[0], 1, len(train.items))


def _run_weeks(task: _Task) -> list[Outcome]:
    h = task.history
    first = h.baskets[0].time
    rows = []
    w = 2
    max_week = task.options.get("max_week")
    only = task.options.get("weeks")
    while True:
        cutoff = first + 7 * w
        n_train = sum(1 for b in h.baskets if b.time < cutoff)
        if n_train >= len(h) or (max_week is not None and w > max_week):
            break
        if n_train >= task.options["min_train"] and (only is None or w in only):
            train = h.head(n_train)
            models = _fit_all(task.methods, train)
            rows.extend(_predict_all(task, models, train, train, h.baskets[n_train], w, len(train.items)))
        w += 1
    return rows


_RUNNERS: dict[str, Callable[[_Task], list[Outcome]]] = {
    "loo": _run_loo,
    "multistep": _run_multistep,
    "subset": _run_subset,
    "weeks": _run_weeks,
}


def _run(task: _Task) -> list[Outcome]:
    return _RUNNERS[task.protocol](task)


def _fan_out(tasks: list[_Task], jobs: int) -> list[list[Outcome]]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_run(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _normalize_policies(k_policies) -> tuple:
    if isinstance(k_policies, (int, str)):
        k_policies = [k_policies]
    out = []
    for p in k_policies:
        if p == PERSONAL:
            out.append(PERSONAL)
        else:
            if int(p) < 1:
                raise ValueError("k must be >= 1")
            out.append(int(p))
    return tuple(out)


def _evaluate(
    protocol: str,
    dataset: Dataset | Iterable[PurchaseHistory],
    methods: Seq[Method],
    k_policies,
    min_baskets: int,
    options: dict,
    jobs: int,
    metadata: dict,
) -> EvaluationReport:
    methods = tuple(methods)
    policies = _normalize_policies(k_policies)
    histories = list(dataset)
    eligible = [h for h in histories if len(h) >= min_baskets]
    tasks = [_Task(protocol, h, methods, policies, options) for h in eligible]
    rows = [r for part in _fan_out(tasks, jobs) for r in part]
    meta = {
        "protocol": protocol,
        "methods": [m.name for m in methods],
        "k_policies": [str(p) for p in policies],
        "customers": len(histories),
        "evaluated": len(eligible),
        "skipped": len(histories) - len(eligible),
        **options,
        **metadata,
    }
    return EvaluationReport(protocol, rows, meta)


def evaluate_leave_one_out(dataset, methods: Seq[Method], k_policies=PERSONAL, jobs: int = 1, metadata: dict | None = None) -> EvaluationReport:
    """Train on all but the last basket, predict the last one.

    Customers with fewer than two baskets are skipped and counted.
    """
    return _evaluate("loo", dataset, methods, k_policies, 2, {}, jobs, metadata or {})


def evaluate_multi_step(
    dataset,
    methods: Seq[Method],
    train_fraction: float = 0.7,
    horizon: int = 20,
    k_policies=PERSONAL,
    jobs: int = 1,
    metadata: dict | None = None,
) -> EvaluationReport:
    """Mine once on a chronological prefix and predict the following baskets.

    Step ``s`` predicts the ``s``-th basket after the prefix, seeing the
    prefix plus the ``s - 1`` baskets before it.  Customers run out of
    steps independently.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    everyone = list(dataset)
    histories = [h for h in everyone if 1 <= int(train_fraction * len(h)) < len(h)]
    skipped = len(everyone) - len(histories)
    rep = _evaluate(
        "multistep", histories, methods, k_policies, 2,
        {"train_fraction": train_fraction, "horizon": horizon}, jobs, metadata or {},
    )
    rep.metadata["customers"] += skipped
    rep.metadata["skipped"] += skipped
    return rep


def evaluate_random_subset(
    dataset,
    methods: Seq[Method],
    fraction_range: tuple[float, float] = (0.7, 0.9),
    seed: int = 0,
    k_policies=PERSONAL,
    jobs: int = 1,
    metadata: dict | None = None,
) -> EvaluationReport:
    """Train on a random-length chronological prefix, predict the next basket.

    The fraction is drawn per customer from a generator seeded with the run
    seed and the customer id.
    """
    lo, hi = fraction_range
    everyone = list(dataset)
    histories = [h for h in everyone if int(lo * len(h)) >= 1 and int(hi * len(h)) < len(h)]
    skipped = len(everyone) - len(histories)
    rep = _evaluate(
        "subset", histories, methods, k_policies, 2,
        {"fraction_range": (lo, hi), "seed": seed}, jobs, metadata or {},
    )
    rep.metadata["fraction_range"] = [lo, hi]
    rep.metadata["customers"] += skipped
    rep.metadata["skipped"] += skipped
    return rep


def evaluate_incremental_weeks(
    dataset,
    methods: Seq[Method],
    k_policies=PERSONAL,
    min_train: int = 2,
    max_week: int | None = None,
    weeks: Iterable[int] | None = None,
    jobs: int = 1,
    metadata: dict | None = None,
) -> EvaluationReport:
    """Grow the training set one week at a time from each customer's first basket.

    Week ``w`` trains on the baskets before day ``first + 7w`` and predicts
    the next basket.  Weeks whose prefix has fewer than ``min_train``
    baskets are skipped for that customer.  ``weeks`` restricts the run
    to the listed weeks.
    """
    if max_week is None and weeks is not None:
        weeks = sorted(set(weeks))
        max_week = weeks[-1] if weeks else 1
    opts = {"min_train": min_train, "max_week": max_week}
    if weeks is not None:
        opts["weeks"] = sorted(set(weeks))
    return _evaluate("weeks", dataset, methods, k_policies, 2, opts, jobs, metadata or {})


@dataclass
class PairedReport:
    free: EvaluationReport
    fixed: EvaluationReport
    triple: ParameterTriple

    def tars_counts(self) -> dict[str, list[int]]:
        return {
            name: [r.n_tars for r in rep.rows if r.n_tars >= 0 and r.k_policy == rep.metadata["k_policies"][0]]
            for name, rep in (("free", self.free), ("fixed", self.fixed))
        }


def evaluate_parameter_fixed(
    dataset,
    k_policies=PERSONAL,
    triple: ParameterTriple = ParameterTriple(14, 3, 2),
    max_len: int = DEFAULT_MAX_LEN,
    jobs: int = 1,
    metadata: dict | None = None,
) -> PairedReport:
    """Leave-one-out TBP with estimated thresholds and with one constant triple."""
    free = evaluate_leave_one_out(dataset, [TbpMethod("tbp", None, max_len)], k_policies, jobs, metadata)
    fixed = evaluate_leave_one_out(
        dataset, [TbpMethod("tbp-fixed", triple, max_len)], k_policies, jobs,
        {**(metadata or {}), "triple": list(triple.as_tuple())},
    )
    return PairedReport(free, fixed, triple)


def merge_reports(protocol: str, reports: Seq[EvaluationReport], metadata: dict | None = None) -> EvaluationReport:
    rows = [r for rep in reports for r in rep.rows]
    return EvaluationReport(protocol, rows, metadata or {})
