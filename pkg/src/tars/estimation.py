"""Per-sequence threshold estimation.

Every base sequence gets its own (max inter-time, min occurrences per
period, min number of periods) triple.  Each value is obtained by binning
a per-sequence statistic into equal-width histogram bins and taking the
median inside the sequence's bin, so sequences with similar behaviour
share similar thresholds.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass, field
from typing import Sequence as Seq

from .occurrence import OccurrenceStats, Period, Sequence, detect_periods


@dataclass(frozen=True)
class ParameterTriple:
    dmax: float
    qmin: float
    pmin: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dmax, self.qmin, self.pmin)


FIXED_DEFAULT = ParameterTriple(14, 3, 2)


def _nearest_rank(sorted_values: Seq[float], p: float) -> float:
    rank = max(1, math.ceil(p * len(sorted_values)))
    return sorted_values[rank - 1]


def num_bins(values: Seq[float]) -> int:
    """max(Sturges, Freedman-Diaconis) bin count, quartiles by nearest rank."""
    if len(values) == 0:
        raise ValueError("num_bins of an empty list")
    n = len(values)
    vs = sorted(values)
    span = vs[-1] - vs[0]
    if span == 0:
        return 1
    sturges = math.ceil(math.log2(n)) + 1
    iqr = _nearest_rank(vs, 0.75) - _nearest_rank(vs, 0.25)
    if iqr == 0:
        return sturges
    width = 2 * iqr * n ** (-1 / 3)
    if width == 0:  # iqr underflowed
        return sturges
    # guard against cube-root rounding pushing an exact ratio over an integer
    fd = math.ceil(span / width - 1e-9)
    return max(sturges, fd, 1)


@dataclass(frozen=True)
class BinClustering:
    """Equal-width bins over ``[lo, hi]``.

    Edges are derived on demand: Freedman-Diaconis can ask for a huge bin
    count when a few values sit far from a tight core.
    """

    lo: float
    hi: float
    n_bins: int
    assignment: tuple[int, ...]  # bin index per input value, input order

    @property
    def edges(self) -> tuple[float, ...]:
        if self.hi == self.lo:
            return (self.lo - 0.5, self.lo + 0.5)
        span = self.hi - self.lo
        return tuple(self.lo + span * k / self.n_bins for k in range(self.n_bins)) + (self.hi,)

    def bounds(self, b: int) -> tuple[float, float]:
        span = self.hi - self.lo
        if span == 0:
            return self.edges
        upper = self.hi if b == self.n_bins - 1 else self.lo + span * (b + 1) / self.n_bins
        return self.lo + span * b / self.n_bins, upper

    def clusters(self) -> dict[int, list[int]]:
        """Non-empty bins mapped to the positions of their members."""
        out: dict[int, list[int]] = {}
        for pos, b in enumerate(self.assignment):
            out.setdefault(b, []).append(pos)
        return dict(sorted(out.items()))


def group_similar(values: Seq[float], n_bins: int | None = None) -> BinClustering:
    if len(values) == 0:
        raise ValueError("group_similar of an empty list")
    nb = num_bins(values) if n_bins is None else n_bins
    lo, hi = min(values), max(values)
    span = hi - lo
    if span == 0:
        return BinClustering(lo, hi, 1, tuple(0 for _ in values))
    assignment = tuple(min(int((v - lo) * nb / span), nb - 1) for v in values)
    return BinClustering(lo, hi, nb, assignment)


def temporally_compliant_periods(stats: OccurrenceStats, dmax: float) -> list[Period]:
    return detect_periods(stats, dmax, 1)


def cluster_medians(values: Seq[float], stat: Seq[float] | None = None) -> tuple[list[float], BinClustering]:
    """Bin ``values``; give each position the median of ``stat`` over its bin.

    ``stat`` defaults to ``values`` itself.
    """
    stat = values if stat is None else stat
    clustering = group_similar(values)
    out = [0.0] * len(values)
    for members in clustering.clusters().values():
        m = statistics.median(stat[p] for p in members)
        for p in members:
            out[p] = m
    return out, clustering


@dataclass
class SequenceTrace:
    sequence: str
    dhat: float
    qhat: float
    w: int
    e: float
    rec: int
    dmax_cluster: int
    qmin_cluster: int
    pmin_cluster: int
    raw_qmin: float
    raw_pmin: float


@dataclass
class EstimationTrace:
    sequences: list[SequenceTrace] = field(default_factory=list)
    dmax_bins: BinClustering | None = None
    qmin_bins: BinClustering | None = None
    pmin_bins: BinClustering | None = None

    def to_dict(self) -> dict:
        def bins(c: BinClustering | None):
            if c is None:
                return None
            occupied = sorted(set(c.assignment))
            return {"lo": c.lo, "hi": c.hi, "n_bins": c.n_bins, "occupied": {b: list(c.bounds(b)) for b in occupied}}

        return {
            "dmax_bins": bins(self.dmax_bins),
            "qmin_bins": bins(self.qmin_bins),
            "pmin_bins": bins(self.pmin_bins),
            "sequences": [asdict(s) for s in self.sequences],
        }


def estimate_parameters(
    base: Seq[tuple[Sequence, OccurrenceStats]],
) -> tuple[dict[Sequence, ParameterTriple], EstimationTrace]:
    """Estimate a threshold triple for every base sequence.

    Three passes, each binning one statistic across all base sequences:

    1. median inter-time; the bin median becomes ``dmax``;
    2. median size of the periods allowed by ``dmax`` alone (no size
       limit); the bin median becomes ``qmin``;
    3. mean period size ``e`` under ``(dmax, qmin)``; ``pmin`` is the
       median period count over the sequences sharing the bin.

    A sequence with no period at pass 2 or 3 contributes 0 for that pass.
    ``qmin`` and ``pmin`` are floored at 1 so an empty period list never
    counts as recurring.
    """
    if not base:
        raise ValueError("no base sequences to estimate parameters for")
    seqs = [s for s, _ in base]
    stats = [st for _, st in base]
    if any(not st for st in stats):
        raise ValueError("every base sequence needs at least one occurrence")

    dhat = [statistics.median(st.inter_times) for st in stats]
    dmax, c_d = cluster_medians(dhat)

    qhat = []
    for st, d in zip(stats, dmax):
        tc = temporally_compliant_periods(st, d)
        qhat.append(statistics.median(p.support for p in tc) if tc else 0)
    raw_qmin, c_q = cluster_medians(qhat)
    qmin = [max(1.0, q) for q in raw_qmin]

    recs, ws, es = [], [], []
    for st, d, q in zip(stats, dmax, qmin):
        ps = detect_periods(st, d, q)
        w = sum(p.support for p in ps)
        recs.append(len(ps))
        ws.append(w)
        es.append(w / len(ps) if ps else 0.0)
    raw_pmin, c_p = cluster_medians(es, recs)
    pmin = [max(1.0, p) for p in raw_pmin]

    triples = {
        s: ParameterTriple(float(d), float(q), float(p))
        for s, d, q, p in zip(seqs, dmax, qmin, pmin)
    }
    trace = EstimationTrace(
        [
            SequenceTrace(str(s), float(dh), float(qh), w, e, r, cd, cq, cp, float(rq), float(rp))
            for s, dh, qh, w, e, r, cd, cq, cp, rq, rp in zip(
                seqs, dhat, qhat, ws, es, recs,
                c_d.assignment, c_q.assignment, c_p.assignment, raw_qmin, raw_pmin,
            )
        ],
        c_d,
        c_q,
        c_p,
    )
    return triples, trace


def fixed_parameters(
    base: Seq[tuple[Sequence, OccurrenceStats]], triple: ParameterTriple = FIXED_DEFAULT
) -> dict[Sequence, ParameterTriple]:
    """Constant triple for every base sequence (estimation bypassed)."""
    return {s: triple for s, _ in base}


def aggregate(triples: Seq[ParameterTriple]) -> ParameterTriple:
    """Element-wise median, used for sequences longer than two items."""
    if len(triples) == 1:
        return triples[0]
    return ParameterTriple(
        float(statistics.median(t.dmax for t in triples)),
        float(statistics.median(t.qmin for t in triples)),
        float(statistics.median(t.pmin for t in triples)),
    )
