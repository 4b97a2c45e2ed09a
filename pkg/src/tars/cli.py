"""Command-line front end: ``tars {mine,predict,evaluate,synth,inspect}``.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence as Seq

from .data import DataError, Dataset, customer_sort_key, dumps_dataset, filter_min_baskets, load_dataset
from .estimation import FIXED_DEFAULT, ParameterTriple
from .evaluation import (
    PERSONAL,
    EvaluationReport,
    evaluate_incremental_weeks,
    evaluate_leave_one_out,
    evaluate_multi_step,
    evaluate_parameter_fixed,
    evaluate_random_subset,
    make_method,
    resolve_k,
)
from .mining import DEFAULT_MAX_LEN, TarsSet, coverage_table, extract_tars, mine_dataset
from .predictor import predict
from .synth import PRESETS, InfeasibleSpec, SyntheticConfig, generate_synthetic, preset

log = logging.getLogger("tars")

METHODS = ("tbp", "top", "lst", "mc")
PROTOCOLS = ("loo", "multistep", "weeks", "fixed", "subset")
# run settings that must not leak into report files, so that reports
# compare equal across machines and degrees of parallelism
_VOLATILE = {"jobs", "out", "plots", "func", "verbose"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- argument types ----------------------------------------------------------

def parse_triple(text: str) -> ParameterTriple:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected DMAX,QMIN,PMIN, e.g. 14,3,2")
    try:
        d, q, p = (float(x) for x in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not numbers: {text!r}") from None
    if d < 1 or q < 1 or p < 1:
        raise argparse.ArgumentTypeError("all three thresholds must be >= 1")
    return ParameterTriple(d, q, p)


def parse_k(text: str) -> list:
    """``personal``, ``N``, ``A..B`` or a comma list of those."""
    out: list = []
    for part in text.split(","):
        part = part.strip()
        if part == PERSONAL:
            out.append(PERSONAL)
            continue
        try:
            if ".." in part:
                lo, hi = (int(x) for x in part.split(".."))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad k {part!r}") from None
    if not out or any(k != PERSONAL and k < 1 for k in out):
        raise argparse.ArgumentTypeError("k values must be >= 1")
    return out


def parse_methods(text: str) -> list[str]:
    names = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {METHODS}")
    return names


def parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO,HI") from None
    if not 0 < lo <= hi < 1:
        raise argparse.ArgumentTypeError("need 0 < LO <= HI < 1")
    return lo, hi


# -- helpers -----------------------------------------------------------------

def _config(args) -> dict:
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in _VOLATILE}


def _jsonable(v):
    if isinstance(v, ParameterTriple):
        return list(v.as_tuple())
    if isinstance(v, tuple):
        return list(v)
    return v


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load(args) -> Dataset:
    ds = load_dataset(args.input)
    if getattr(args, "min_baskets", 1) > 1:
        ds = filter_min_baskets(ds, args.min_baskets)
    return ds


def _model_file(model_dir: str, cid: str) -> str:
    return os.path.join(model_dir, f"{cid}.jsonl")


def _read_model(model_dir: str, cid: str) -> TarsSet:
    path = _model_file(model_dir, cid)
    if not os.path.exists(path):
        raise DataError(f"no mined model for customer {cid} in {model_dir}")
    with open(path, encoding="utf-8") as fh:
        return TarsSet.load(fh, cid)


# -- commands ----------------------------------------------------------------

def cmd_mine(args) -> int:
    ds = _load(args)
    models = mine_dataset(ds, max_len=args.max_len, fixed=args.fixed, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    for cid, ts in models.items():
        _write(_model_file(args.out, cid), ts.dumps())
        if args.trace and ts.trace is not None:
            _write(os.path.join(args.out, f"{cid}.trace.json"), json.dumps(ts.trace.to_dict(), indent=1) + "\n")
    meta = {"config": _config(args), "customers": len(models), "tars": sum(len(t) for t in models.values())}
    _write(os.path.join(args.out, "run.json"), json.dumps(meta, indent=2, sort_keys=True) + "\n")
    log.info("mined %d TARS for %d customers", meta["tars"], meta["customers"])
    return 0


def cmd_predict(args) -> int:
    ds = _load(args)
    if args.method == "tbp" and not args.model and not args.mine_on_the_fly:
        raise UsageError("tbp needs --model DIR or --mine-on-the-fly")
    (policy,) = args.k if len(args.k) == 1 else (None,)
    if policy is None:
        raise UsageError("predict takes a single k")
    lines = []
    for h in ds:
        k = resolve_k(policy, h)
        rec = {"customer": h.customer_id, "method": args.method, "k": k}
        if args.method == "tbp":
            if args.mine_on_the_fly:
                tars = extract_tars(h, max_len=args.max_len, fixed=args.fixed).tars
            else:
                tars = _read_model(args.model, h.customer_id).tars
            pr = predict(h, tars, k)
            rec.update(items=pr.items, scores=pr.scores, active_tars=pr.n_active)
        else:
            if args.method == "mc" and len(h) < 2:
                raise DataError(f"customer {h.customer_id}: Markov chain needs >= 2 baskets")
            m = make_method(args.method)
            items, _ = m.predict(m.fit(h), h, k)
            rec.update(items=items)
        if args.labels:
            rec["labels"] = [ds.label(i) for i in rec["items"]]
        lines.append(json.dumps(rec))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _write_report(rep: EvaluationReport, out: str, prefix: str = "") -> None:
    _write(os.path.join(out, f"{prefix}rows.csv"), rep.rows_csv())
    _write(os.path.join(out, f"{prefix}summary.csv"), rep.summary_csv())
    _write(os.path.join(out, f"{prefix}report.json"), rep.to_json())


def cmd_evaluate(args) -> int:
    ds = _load(args)
    meta = {"config": _config(args)}
    methods = [make_method(m, fixed=args.fixed if m == "tbp" else None, max_len=args.max_len) for m in args.methods]
    kw = dict(k_policies=args.k, jobs=args.jobs, metadata=meta)
    if args.protocol == "loo":
        reports = {"": evaluate_leave_one_out(ds, methods, **kw)}
    elif args.protocol == "multistep":
        reports = {"": evaluate_multi_step(ds, methods, args.train_fraction, args.horizon, **kw)}
    elif args.protocol == "subset":
        reports = {"": evaluate_random_subset(ds, methods, args.fraction_range, args.seed, **kw)}
    elif args.protocol == "weeks":
        reports = {"": evaluate_incremental_weeks(
            ds, methods, min_train=args.min_train, max_week=args.max_week, weeks=args.weeks, **kw
        )}
    else:
        paired = evaluate_parameter_fixed(ds, triple=args.fixed or FIXED_DEFAULT, max_len=args.max_len, **kw)
        reports = {"free_": paired.free, "fixed_": paired.fixed}
        counts = paired.tars_counts()
        rows = ["customer,free,fixed"] + [
            f"{r.customer},{a},{b}"
            for r, a, b in zip(
                [r for r in paired.free.rows if r.k_policy == paired.free.metadata["k_policies"][0]],
                counts["free"], counts["fixed"],
            )
        ]
        _write(os.path.join(args.out, "tars_counts.csv"), "\n".join(rows) + "\n")
    for prefix, rep in reports.items():
        _write_report(rep, args.out, prefix)
    for prefix, rep in reports.items():
        for line in rep.summary():
            print(
                f"{prefix or ''}{line['method']}\tk={line['k_policy']}\tstep={line['step']}\tn={line['n']}\t"
                f"F1={line['f1']:.4f}\tHR={line['hit_ratio']:.4f}\tnF1={line['normalized_f1']:.4f}"
            )
    if args.plots:
        from . import plotting

        for prefix, rep in reports.items():
            sub = os.path.join(args.out, "figures", prefix.rstrip("_")) if prefix else os.path.join(args.out, "figures")
            for p in plotting.figures_for(rep, sub):
                log.info("wrote %s", p)
        if args.protocol == "fixed":
            plotting.plot_tars_counts(paired, os.path.join(args.out, "figures", "tars_counts.png"))
    return 0


def cmd_synth(args) -> int:
    if args.config:
        cfg = SyntheticConfig.load(args.config)
    else:
        cfg = preset(args.preset)
    overrides = {k: v for k, v in (("seed", args.seed), ("customers", args.customers)) if v is not None}
    if overrides:
        cfg = SyntheticConfig.from_dict({**cfg.to_dict(), **overrides})
    ds, truth = generate_synthetic(cfg, with_truth=True)
    fmt = "jsonl" if args.out.endswith((".jsonl", ".json")) else "csv"
    _write(args.out, dumps_dataset(ds, fmt))
    if args.truth:
        doc = {
            "config": cfg.to_dict(),
            "customers": {
                cid: {
                    "patterns": tr.patterns,
                    "periods": [{"pattern": p.pattern, "occurrences": p.occurrences} for p in tr.periods],
                }
                for cid, tr in truth.items()
            },
        }
        _write(args.truth, json.dumps(doc, sort_keys=True) + "\n")
    log.info("wrote %d customers to %s", len(ds), args.out)
    return 0


def cmd_inspect(args) -> int:
    if not os.path.isdir(args.model):
        raise DataError(f"model directory {args.model} not found")
    models = {}
    for name in sorted(os.listdir(args.model)):
        if name.endswith(".jsonl"):
            cid = name[: -len(".jsonl")]
            models[cid] = _read_model(args.model, cid)
    models = dict(sorted(models.items(), key=lambda kv: customer_sort_key(kv[0])))
    label = str
    if args.input:
        label = load_dataset(args.input).label
    rows = coverage_table(models)
    if args.top is not None:
        rows = rows[: args.top]
    for r in rows:
        h = ",".join(label(i) for i in sorted(r["sequence"].head))
        t = ",".join(label(i) for i in sorted(r["sequence"].tail))
        print(
            f"{r['coverage']:.3f}\t{{{h}}} --({r['a1']:g},{r['a2']:g})-->"
            f"[p={r['p']:.2f},q={r['q']:.2f}] {{{t}}}"
        )
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tars", description="Recurring-sequence mining and next-basket prediction.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(p, required=True):
        p.add_argument("--in", dest="input", required=required, help="transactions (.csv or .jsonl)")
        p.add_argument("--min-baskets", type=int, default=1, help="drop customers with fewer baskets")

    def mining_args(p):
        p.add_argument("--fixed", type=parse_triple, default=None, metavar="D,Q,P",
                       help="constant thresholds instead of estimation, e.g. 14,3,2")
        p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)

    p = sub.add_parser("mine", help="mine TARS, one model file per customer")
    data_args(p)
    mining_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--trace", action="store_true", help="also dump the threshold estimation trace")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("predict", help="predict each customer's next basket")
    data_args(p)
    mining_args(p)
    p.add_argument("--k", type=parse_k, default=[PERSONAL], help="N or 'personal'")
    p.add_argument("--method", choices=METHODS, default="tbp")
    p.add_argument("--model", help="directory written by 'mine'")
    p.add_argument("--mine-on-the-fly", action="store_true")
    p.add_argument("--labels", action="store_true", help="add item labels to the output")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="run an evaluation protocol")
    data_args(p)
    mining_args(p)
    p.add_argument("--protocol", choices=PROTOCOLS, default="loo")
    p.add_argument("--methods", type=parse_methods, default=list(METHODS))
    p.add_argument("--k", type=parse_k, default=[PERSONAL], help="'personal', N, A..B or a comma list")
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--fraction-range", type=parse_range, default=(0.7, 0.9))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-train", type=int, default=2)
    p.add_argument("--max-week", type=int, default=None)
    p.add_argument("--weeks", type=parse_k, default=None, help="only these weeks, e.g. 10,40 or 2..8")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plots", action="store_true", help="render figures next to the reports")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--preset", choices=sorted(PRESETS), default="staples")
    p.add_argument("--config", help="JSON or TOML config (overrides --preset)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--customers", type=int, default=None)
    p.add_argument("--truth", help="also write the planted ground truth (JSON)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inspect", help="list the most common TARS across customers")
    p.add_argument("--model", required=True, help="directory written by 'mine'")
    p.add_argument("--in", dest="input", help="dataset, for item labels")
    p.add_argument("--top", type=int, default=None)
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv: Seq[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    for name in ("jobs", "horizon", "max_len", "min_baskets"):
        if getattr(args, name, 1) is not None and getattr(args, name, 1) < 1:
            parser.error(f"--{name.replace('_', '-')} must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (DataError, InfeasibleSpec, FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as exc:
        print(f"tars: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"tars: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
