"""Result files, standardized summaries and plot series."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .protocol import RunRecord
from .stats import standardize_metrics, wilcoxon_signed_rank

RESULT_COLUMNS = ("dataset", "method", "noise", "permutation", "leaves", "accuracy", "param",
                  "seconds")
SUMMARY_COLUMNS = ("method", "noise", "cells", "leaves_z", "leaves_p", "accuracy_z",
                   "accuracy_p", "leaves", "accuracy", "param", "seconds")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_results(records, path):
    """Writes RunRecords as CSV; empty cells stand for missing values."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(RESULT_COLUMNS)
        for r in records:
            out.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])


def read_results(path):
    def opt(s):
        return float(s) if s != "" else None

    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(RESULT_COLUMNS) - set(rows[0]):
        raise ValueError(f"{path}: missing columns {sorted(set(RESULT_COLUMNS) - set(rows[0]))}")
    return [RunRecord(r["dataset"], r["method"], float(r["noise"]), int(r["permutation"]),
                      int(r["leaves"]), float(r["accuracy"]), opt(r["param"]), opt(r["seconds"]))
            for r in rows]


@dataclass
class SummaryRow:
    """Aggregates of one (method, noise) cell.

    The z columns are means of per-dataset standardized values; the p
    columns are Wilcoxon p-values of the z pairs against C4.5 at the same
    noise level (None when undefined, e.g. for C4.5 itself).
    """

    method: str
    noise: float
    cells: int
    leaves_z: float
    leaves_p: object
    accuracy_z: float
    accuracy_p: object
    leaves: float
    accuracy: float
    param: object
    seconds: object


def _pvalue(a, b):
    ok = ~(np.isnan(a) | np.isnan(b))
    try:
        return float(wilcoxon_signed_rank(a[ok], b[ok]).pvalue)
    except ValueError:
        return None


def _mean_or_none(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def summarize(records, baseline_method="C45", baseline_noise=0.0):
    """Standardized means and significance per (method, noise).

    Datasets whose baseline std is zero are left out of the z means.

    Returns:
        (rows, leaves StandardizedMetric, accuracy StandardizedMetric).
    """
    records = list(records)
    zl = standardize_metrics(records, "leaves", baseline_method, baseline_noise, "flag")
    za = standardize_metrics(records, "accuracy", baseline_method, baseline_noise, "flag")
    index = {r.key(): i for i, r in enumerate(records)}
    cells = {}
    for i, r in enumerate(records):
        cells.setdefault((r.method, r.noise), []).append(i)
    methods = list(dict.fromkeys(r.method for r in records))
    rows = []
    for method in methods:
        for noise in sorted({n for m, n in cells if m == method}):
            idx = cells[(method, noise)]
            sel = [records[i] for i in idx]
            p = {}
            for name, z in (("leaves", zl.values), ("accuracy", za.values)):
                pairs = [(z[i], z[index[(records[i].dataset, baseline_method, noise,
                                          records[i].permutation)]])
                         for i in idx
                         if (records[i].dataset, baseline_method, noise,
                             records[i].permutation) in index]
                if method == baseline_method or not pairs:
                    p[name] = None
                else:
                    a, b = np.array(pairs).T
                    p[name] = _pvalue(a, b)
            rows.append(SummaryRow(
                method, noise, len(idx),
                float(np.nanmean(zl.values[idx])) if np.any(~np.isnan(zl.values[idx])) else math.nan,
                p["leaves"],
                float(np.nanmean(za.values[idx])) if np.any(~np.isnan(za.values[idx])) else math.nan,
                p["accuracy"],
                float(np.mean([r.leaves for r in sel])),
                float(np.mean([r.accuracy for r in sel])),
                _mean_or_none(r.param for r in sel),
                _mean_or_none(r.seconds for r in sel)))
    return rows, zl, za


def write_summary(rows, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(SUMMARY_COLUMNS)
        for r in rows:
            out.writerow([_fmt(getattr(r, c)) for c in SUMMARY_COLUMNS])


def plot_series(rows, field):
    """Table with one row per noise level and one column per method."""
    methods = list(dict.fromkeys(r.method for r in rows))
    noises = sorted({r.noise for r in rows})
    lookup = {(r.method, r.noise): getattr(r, field) for r in rows}
    return methods, [(n, [lookup.get((m, n)) for m in methods]) for n in noises]


def write_plot_series(rows, field, path):
    methods, table = plot_series(rows, field)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["noise", *methods])
        for n, vals in table:
            out.writerow([_fmt(n), *(_fmt(v) for v in vals)])


PLOT_FIELDS = ("leaves_z", "accuracy_z", "param")


def write_reports(records, outdir, prefix="exp"):
    """Writes results, summary and plot-series CSVs into ``outdir``.

    Returns:
        (summary rows, dict of written paths).
    """
    os.makedirs(outdir, exist_ok=True)
    paths = {"results": os.path.join(outdir, f"{prefix}_results.csv"),
             "summary": os.path.join(outdir, f"{prefix}_summary.csv")}
    write_results(records, paths["results"])
    rows, _, _ = summarize(records)
    write_summary(rows, paths["summary"])
    for field in PLOT_FIELDS:
        paths[field] = os.path.join(outdir, f"{prefix}_{field}.csv")
        write_plot_series(rows, field, paths[field])
    return rows, paths


def _cell(z, p):
    if z is None or math.isnan(z):
        return "     n/a    "
    mark = "*" if p is not None and p < 0.05 else " "
    return f"{z:+7.2f}{mark}    "


def format_table(rows, title="Standardized leaves and accuracy"):
    """Text table: rows are methods, columns are noise levels.

    Values are mean z-scores; a star marks p < 0.05 against C4.5.
    """
    noises = sorted({r.noise for r in rows})
    methods = list(dict.fromkeys(r.method for r in rows))
    lookup = {(r.method, r.noise): r for r in rows}
    head = "method  " + "".join(f"n={n:<9g}  " for n in noises)
    lines = [title]
    for label, zf, pf in (("leaves", "leaves_z", "leaves_p"),
                          ("accuracy", "accuracy_z", "accuracy_p")):
        lines += ["", f"[{label}]", head]
        for m in methods:
            cells = []
            for n in noises:
                r = lookup.get((m, n))
                cells.append(_cell(getattr(r, zf), getattr(r, pf)) if r else "     -      ")
            lines.append(f"{m:<8}" + "".join(cells))
    return "\n".join(lines)
