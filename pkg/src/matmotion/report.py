"""Rendering of cross-validation reports as text and CSV tables.

Text tables show percentages as "mean [low high]" at two decimals, one
row per architecture in catalog order; the CSV variant carries full
precision. A pairwise comparison matrix holds two-sided p-values over
fold balanced accuracies for both t-test variants.
"""

from __future__ import annotations

import csv
import io

from .architectures import ARCH_NAMES
from .crossval import CvReport
from .metrics import MODE_PAIRED, MODE_WELCH, t_test

_COLUMNS = (
    ("tpr", "Sensitivity (%)"),
    ("tnr", "Specificity (%)"),
    ("balanced_accuracy", "Balanced Accuracy (%)"),
)


def _catalog_order(reports: list[CvReport]) -> list[CvReport]:
    rank = {name: i for i, name in enumerate(ARCH_NAMES)}
    return sorted(reports, key=lambda r: rank.get(r.arch, len(rank)))


def _cell(agg: dict) -> str:
    if agg["mean"] is None:
        return "undefined"
    mean = agg["mean"] * 100.0
    if agg["ci_low"] is None:
        return f"{mean:.2f} [n/a]"
    return f"{mean:.2f} [{agg['ci_low'] * 100.0:.2f} {agg['ci_high'] * 100.0:.2f}]"


def render_text(reports: list[CvReport]) -> str:
    """Plain-text summary table, one architecture per row."""
    if not reports:
        raise ValueError("need at least one report")
    reports = _catalog_order(reports)
    header = ["Classifier"] + [label for _, label in _COLUMNS]
    rows = [header]
    for rep in reports:
        row = [rep.arch]
        for key, _ in _COLUMNS:
            row.append(_cell(rep.aggregate[key]))
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_csv(reports: list[CvReport]) -> str:
    """Full-precision CSV: aggregate means/CIs plus per-fold rates."""
    if not reports:
        raise ValueError("need at least one report")
    reports = _catalog_order(reports)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["arch"]
    for key, _ in _COLUMNS:
        header += [f"{key}_mean", f"{key}_ci_low", f"{key}_ci_high"]
    header += ["fold", "fold_tpr", "fold_tnr", "fold_balanced_accuracy"]
    writer.writerow(header)
    for rep in reports:
        base = [rep.arch]
        for key, _ in _COLUMNS:
            agg = rep.aggregate[key]
            base += [_fmt(agg["mean"]), _fmt(agg["ci_low"]), _fmt(agg["ci_high"])]
        for fold in rep.folds:
            writer.writerow(base + [
                fold.fold,
                _fmt(fold.metrics_dict["tpr"]),
                _fmt(fold.metrics_dict["tnr"]),
                _fmt(fold.metrics_dict["balanced_accuracy"]),
            ])
    return buf.getvalue()


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def comparison_matrix(reports: list[CvReport]) -> list[dict]:
    """Pairwise p-values over fold balanced accuracies (both variants)."""
    reports = _catalog_order(reports)
    rows = []
    for a in reports:
        for b in reports:
            if a.arch >= b.arch:
                continue
            ba_a = a.fold_values("balanced_accuracy")
            ba_b = b.fold_values("balanced_accuracy")
            if any(v is None for v in ba_a + ba_b):
                rows.append({"arch_a": a.arch, "arch_b": b.arch,
                             "p_paired": None, "p_welch": None})
                continue
            paired = (t_test(ba_a, ba_b, MODE_PAIRED)
                      if len(ba_a) == len(ba_b) else None)
            rows.append({
                "arch_a": a.arch, "arch_b": b.arch,
                "p_paired": paired,
                "p_welch": t_test(ba_a, ba_b, MODE_WELCH),
            })
    return rows


def comparison_csv(reports: list[CvReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["arch_a", "arch_b", "p_paired", "p_welch"])
    for row in comparison_matrix(reports):
        writer.writerow([row["arch_a"], row["arch_b"],
                         _fmt(row["p_paired"]), _fmt(row["p_welch"])])
    return buf.getvalue()
