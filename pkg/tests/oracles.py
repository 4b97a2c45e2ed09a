"""Brute-force reference implementations used only by the tests.

Nothing here imports the package's algorithms; only the plain data types
are shared.  The code favours being obviously right over being fast.
"""

from __future__ import annotations

import itertools
import math


# -- occurrences -------------------------------------------------------------

def occurrence_pairs(baskets, head, tail):
    """Every (t_h, t_l) with head in the earlier basket and tail in the later one."""
    head, tail = set(head), set(tail)
    return [
        (b1.time, b2.time)
        for b1, b2 in itertools.combinations(baskets, 2)
        if head <= b1.items and tail <= b2.items
    ]


def brute_minimal_occurrences(baskets, head, tail):
    """Keep the pairs that strictly contain no other qualifying pair.

    Returns (head_times, intra_times, inter_times) as tuples.
    """
    pairs = occurrence_pairs(baskets, head, tail)
    minimal = []
    for a in pairs:
        nested = any(b != a and a[0] <= b[0] and b[1] <= a[1] for b in pairs)
        if not nested:
            minimal.append(a)
    minimal.sort()
    th = tuple(h for h, _ in minimal)
    intra = tuple(l - h for h, l in minimal)
    inter = tuple(th[j + 1] - th[j] for j in range(len(th) - 1)) + intra[-1:]
    return th, intra, inter


def brute_periods(inter, dmax, qmin):
    """Index runs with every inter-time <= dmax, at least qmin long."""
    runs = []
    for ok, grp in itertools.groupby(range(len(inter)), key=lambda j: inter[j] <= dmax):
        grp = list(grp)
        if ok and len(grp) >= qmin:
            runs.append(grp)
    return runs


def median(xs):
    xs = sorted(xs)
    n = len(xs)
    if n % 2:
        return xs[n // 2]
    return (xs[n // 2 - 1] + xs[n // 2]) / 2


# -- threshold estimation ----------------------------------------------------

def _quartile(xs, p):
    xs = sorted(xs)
    return xs[max(1, math.ceil(p * len(xs))) - 1]


def bins_for(xs):
    n = len(xs)
    lo, hi = min(xs), max(xs)
    if hi == lo:
        return 1
    sturges = math.ceil(math.log2(n)) + 1
    iqr = _quartile(xs, 0.75) - _quartile(xs, 0.25)
    if iqr == 0:
        return sturges
    h = 2 * iqr / n ** (1 / 3)
    return max(sturges, math.ceil((hi - lo) / h - 1e-9))


def bin_of(xs):
    """Equal-width bin index per value."""
    lo, hi = min(xs), max(xs)
    if hi == lo:
        return [0] * len(xs)
    nb = bins_for(xs)
    width = (hi - lo) / nb
    return [min(nb - 1, int((x - lo) / width)) if x < hi else nb - 1 for x in xs]


def bin_median(xs, stat=None):
    stat = xs if stat is None else stat
    idx = bin_of(xs)
    return [median([stat[j] for j in range(len(xs)) if idx[j] == idx[i]]) for i in range(len(xs))]


def straight_line_estimation(base):
    """``base`` maps name -> inter-time list.  Returns name -> (dmax, qmin, pmin).

    Written directly from the three binning passes, with the same floors
    at 1 the package applies to the count thresholds.
    """
    names = sorted(base)
    deltas = [base[s] for s in names]
    dhat = [median(d) for d in deltas]
    dmax = bin_median(dhat)
    qhat = []
    for d, dm in zip(deltas, dmax):
        sizes = [len(r) for r in brute_periods(d, dm, 1)]
        qhat.append(median(sizes) if sizes else 0)
    qmin = [max(1, q) for q in bin_median(qhat)]
    e, rec = [], []
    for d, dm, qm in zip(deltas, dmax, qmin):
        runs = brute_periods(d, dm, qm)
        rec.append(len(runs))
        e.append(sum(map(len, runs)) / len(runs) if runs else 0.0)
    pmin = [max(1, p) for p in bin_median(e, rec)]
    return {s: (float(a), float(b), float(c)) for s, a, b, c in zip(names, dmax, qmin, pmin)}


# -- whole mining pipeline ---------------------------------------------------

def _nonempty_subsets(items, max_size):
    for r in range(1, max_size + 1):
        yield from itertools.combinations(items, r)


def brute_tars(baskets, max_len=4, fixed=None):
    """Every recurring sequence up to ``max_len`` items, by exhaustive search.

    Returns a set of (head, tail, a1, a2, p, q) with head/tail as sorted
    tuples.  Thresholds come from :func:`straight_line_estimation` unless
    ``fixed`` is given.
    """
    items = sorted({i for b in baskets for i in b.items})
    stats = {}
    for x in items:
        for y in items:
            th, intra, inter = brute_minimal_occurrences(baskets, {x}, {y})
            if th:
                stats[(x, y)] = (th, intra, inter)
    if not stats:
        return set()
    if fixed is not None:
        triples = {s: tuple(map(float, fixed)) for s in stats}
    else:
        triples = straight_line_estimation({s: st[2] for s, st in stats.items()})
    recurring = {
        s for s, (_, _, inter) in stats.items()
        if len(brute_periods(inter, triples[s][0], triples[s][1])) >= triples[s][2]
    }

    out = set()
    for head in _nonempty_subsets(items, max_len - 1):
        for tail in _nonempty_subsets(items, max_len - len(head)):
            pairs = [(x, y) for x in head for y in tail]
            if not all(p in recurring for p in pairs):
                continue
            th, intra, inter = brute_minimal_occurrences(baskets, head, tail)
            if not th:
                continue
            dmax = median([triples[p][0] for p in pairs])
            qmin = median([triples[p][1] for p in pairs])
            pmin = median([triples[p][2] for p in pairs])
            runs = brute_periods(inter, dmax, qmin)
            if not runs or len(runs) < pmin:
                continue
            inside = [intra[j] for r in runs for j in r]
            out.add((head, tail, min(inside), max(inside), len(runs), float(median([len(r) for r in runs]))))
    return out


# -- predictor and baselines -------------------------------------------------

def straight_line_scores(active, sup):
    """``active`` is a list of (tail items, q, Q)."""
    omega = {}
    for tail, q, used in active:
        for i in tail:
            omega[i] = omega.get(i, 0) + (q - used)
    return {i: s + sup.get(i, 0) for i, s in omega.items()}


def straight_line_mc(baskets, k):
    seqs = [sorted(b.items) for b in baskets]
    count, row = {}, {}
    for prev, cur in zip(seqs, seqs[1:]):
        for i in prev:
            row[i] = row.get(i, 0) + len(cur)
            for j in cur:
                count[(i, j)] = count.get((i, j), 0) + 1
    freq = {}
    for s in seqs:
        for i in s:
            freq[i] = freq.get(i, 0) + 1
    last = seqs[-1]
    score = {
        j: sum(count.get((i, j), 0) / row[i] for i in last if row.get(i)) / len(last)
        for j in freq
    }
    return sorted(freq, key=lambda j: (-round(score[j], 12), -freq[j], j))[:k]
