"""Paired significance testing and baseline standardization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

EXACT_MAX_N = 25


class WilcoxonResult(NamedTuple):
    statistic: float
    pvalue: float
    n: int
    exact: bool


def _exact_lower_tail(doubled_ranks, w2):
    """P(T <= w) for the signed-rank sum T under random signs.

    Works on doubled ranks so tied (half-integer) ranks stay integral.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks.astype(np.int64):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts[: w2 + 1].sum() / counts.sum()


def wilcoxon_signed_rank(a, b):
    """Two-sided Wilcoxon signed-rank test of paired samples.

    Zero differences are dropped; tied magnitudes get average ranks. The
    statistic is the smaller of the positive and negative rank sums. The
    p-value is exact for up to 25 nonzero pairs and otherwise uses the
    normal approximation with tie correction.

    Raises:
        ValueError: On unequal lengths, all-zero differences or fewer than
            5 nonzero differences.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    d = a - b
    d = d[d != 0]
    if d.size == 0:
        raise ValueError("all differences are zero")
    n = d.size
    if n < 5:
        raise ValueError(f"need at least 5 nonzero differences, got {n}")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if n <= EXACT_MAX_N:
        p = 2.0 * _exact_lower_tail(np.rint(2 * ranks), int(round(2 * w)))
        return WilcoxonResult(w, min(1.0, p), n, True)
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes ** 3 - tie_sizes)) / 48.0
    z = (w - n * (n + 1) / 4.0) / math.sqrt(var)
    return WilcoxonResult(w, min(1.0, 2.0 * float(ndtr(z))), n, False)


def standardize(value, mean, std):
    """z-score of ``value`` against a baseline distribution."""
    if not std > 0:
        raise ValueError("baseline standard deviation must be positive")
    return (value - mean) / std


@dataclass
class StandardizedMetric:
    """Per-dataset baseline moments and z-scores aligned with the records.

    Attributes:
        metric: Record field that was standardized.
        baseline_mean: Dataset -> baseline mean.
        baseline_std: Dataset -> baseline sample standard deviation.
        values: z-score per input record (NaN for unusable datasets).
        unusable: Datasets whose baseline std is zero.
    """

    metric: str
    baseline_mean: dict
    baseline_std: dict
    values: np.ndarray
    unusable: set = field(default_factory=set)


def standardize_metrics(records, metric="accuracy", baseline_method="C45", baseline_noise=0.0,
                        on_zero_std="raise"):
    """Standardizes a record field against the zero-noise baseline cells.

    The baseline of each dataset is the set of ``baseline_method`` records
    at ``baseline_noise``; its mean and sample standard deviation define
    the z-score of every record of that dataset.

    Args:
        records: Iterable of RunRecord-like objects.
        metric: Field name, e.g. "accuracy" or "leaves".
        baseline_method: Method providing the baseline.
        baseline_noise: Noise level of the baseline cells.
        on_zero_std: "raise" or "flag" when a baseline std is zero.

    Raises:
        ValueError: When a dataset lacks at least 2 baseline records, or on
            zero std with ``on_zero_std="raise"``.
    """
    records = list(records)
    base = {}
    for r in records:
        if r.method == baseline_method and r.noise == baseline_noise:
            base.setdefault(r.dataset, []).append(float(getattr(r, metric)))
    means, stds, unusable = {}, {}, set()
    for ds in dict.fromkeys(r.dataset for r in records):
        vals = base.get(ds, [])
        if len(vals) < 2:
            raise ValueError(f"dataset {ds!r}: need >= 2 baseline records")
        means[ds] = float(np.mean(vals))
        stds[ds] = float(np.std(vals, ddof=1))
        if not stds[ds] > 0:
            if on_zero_std == "raise":
                raise ValueError(f"dataset {ds!r}: zero baseline std for {metric}")
            unusable.add(ds)
    z = np.array([np.nan if r.dataset in unusable
                  else (float(getattr(r, metric)) - means[r.dataset]) / stds[r.dataset]
                  for r in records])
    return StandardizedMetric(metric, means, stds, z, unusable)
