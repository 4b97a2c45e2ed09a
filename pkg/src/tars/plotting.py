"""Figures for evaluation reports, written to image files.

Uses the non-interactive Agg backend; nothing here opens a window.
"""

from __future__ import annotations

import os
from typing import Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .evaluation import PERSONAL, EvaluationReport, PairedReport  # noqa: E402

_PANELS = (("f1", "F1"), ("n_items", "distinct items"), ("n_tars", "TARS"), ("n_active", "active TARS"))


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def _by_method(lines: Iterable[dict]) -> dict[str, list[dict]]:
    out: dict[str, list[dict]] = {}
    for line in lines:
        out.setdefault(line["method"], []).append(line)
    return out


def plot_metric_vs_k(report: EvaluationReport, path: str) -> str:
    """F1 and Hit-Ratio against a fixed k, one line per method."""
    lines = [l for l in report.summary() if l["k_policy"] != PERSONAL and l["step"] == 1]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for method, ls in sorted(_by_method(lines).items()):
        ls.sort(key=lambda l: int(l["k_policy"]))
        ks = [int(l["k_policy"]) for l in ls]
        axes[0].plot(ks, [l["f1"] for l in ls], marker="o", label=method)
        axes[1].plot(ks, [l["hit_ratio"] for l in ls], marker="o", label=method)
    for ax, name in zip(axes, ("F1", "Hit-Ratio")):
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.set_xlabel("k")
        ax.set_ylabel(name)
        ax.grid(alpha=0.3)
    axes[0].legend()
    return _save(fig, path)


def plot_methods(report: EvaluationReport, path: str) -> str:
    """Bar chart of mean F1 and Hit-Ratio per method at step 1."""
    lines = [l for l in report.summary() if l["step"] == 1]
    labels = [f"{l['method']}\nk={l['k_policy']}" for l in lines]
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(lines)), 3.5))
    xs = range(len(lines))
    ax.bar([x - 0.2 for x in xs], [l["f1"] for l in lines], width=0.4, label="F1")
    ax.bar([x + 0.2 for x in xs], [l["hit_ratio"] for l in lines], width=0.4, label="Hit-Ratio")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0, 1)
    ax.legend()
    return _save(fig, path)


def plot_steps(report: EvaluationReport, path: str) -> str:
    """Mean F1 per prediction step."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for (method, policy), ls in sorted(_group(report.summary()).items()):
        ax.plot([l["step"] for l in ls], [l["f1"] for l in ls], marker=".", label=f"{method} k={policy}")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set_xlabel("prediction step")
    ax.set_ylabel("F1")
    ax.set_ylim(0, 1)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def _group(lines):
    out: dict[tuple[str, str], list[dict]] = {}
    for l in lines:
        out.setdefault((l["method"], l["k_policy"]), []).append(l)
    for ls in out.values():
        ls.sort(key=lambda l: l["step"])
    return out


def plot_weeks(report: EvaluationReport, path: str) -> str:
    """Median with 25-75 and 10-90 percentile bands, one panel per statistic."""
    groups = _group(report.summary())
    fig, axes = plt.subplots(1, 4, figsize=(14, 3.2))
    for ax, (stat, title) in zip(axes, _PANELS):
        for (method, policy), ls in sorted(groups.items()):
            ls = [l for l in ls if f"{stat}_p50" in l]
            if not ls:
                continue
            w = [l["step"] for l in ls]
            ax.fill_between(w, [l[f"{stat}_p10"] for l in ls], [l[f"{stat}_p90"] for l in ls], alpha=0.15)
            ax.fill_between(w, [l[f"{stat}_p25"] for l in ls], [l[f"{stat}_p75"] for l in ls], alpha=0.3)
            ax.plot(w, [l[f"{stat}_p50"] for l in ls], label=f"{method} k={policy}")
        ax.set_title(title)
        ax.set_xlabel("week")
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    return _save(fig, path)


def plot_tars_counts(paired: PairedReport, path: str) -> str:
    """Per-customer TARS counts with estimated and with constant thresholds."""
    counts = paired.tars_counts()
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    triple = ",".join(f"{v:g}" for v in paired.triple.as_tuple())
    for ax, (name, title) in zip(axes, (("free", "estimated thresholds"), ("fixed", f"fixed ({triple})"))):
        vals = counts[name]
        ax.hist(vals, bins=min(30, max(1, len(set(vals)))))
        ax.set_title(title)
        ax.set_xlabel("TARS per customer")
    axes[0].set_ylabel("customers")
    return _save(fig, path)


def figures_for(report: EvaluationReport, out_dir: str) -> list[str]:
    """Every figure that fits the report's protocol."""
    paths = []
    policies = {l["k_policy"] for l in report.summary()}
    if report.protocol == "multistep":
        paths.append(plot_steps(report, os.path.join(out_dir, "f1_per_step.png")))
    elif report.protocol == "weeks":
        paths.append(plot_weeks(report, os.path.join(out_dir, "weeks.png")))
    else:
        if len(policies - {PERSONAL}) > 1:
            paths.append(plot_metric_vs_k(report, os.path.join(out_dir, "metrics_vs_k.png")))
        paths.append(plot_methods(report, os.path.join(out_dir, "methods.png")))
    return paths
