"""Uncertain-data tree baseline: Gaussian oversampling of every measurement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_data import Dataset, as_rng, histogram_from_arrays
from .inference import EvalConfig
from .pruning import PruneConfig, ebp_prune
from .split_search import _select, dense_weights, hard_scan, sorted_columns
from .tree_induction import GrowConfig, TreeGrower


@dataclass(frozen=True)
class UdtConfig:
    """Oversampling settings.

    Attributes:
        w: Noise std as a fraction of each attribute's training range.
        samples: Draws per measurement.
    """

    w: float = 0.0
    samples: int = 100

    def __post_init__(self):
        if self.w < 0:
            raise ValueError("w must be nonnegative")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")


def _noise_scale(ranges, w):
    r = np.asarray(ranges, dtype=float)
    return np.where(np.isfinite(r) & (r > 0), w * r, 0.0)


def oversample(view, data, j, cfg, rng, ranges=None):
    """Replaces each measurement of attribute ``j`` by Gaussian draws.

    Every (value x, weight w0) entry of ``view`` becomes ``cfg.samples``
    values drawn from Normal(x, (w * range_j)^2), each of weight
    ``w0 / samples``. A zero range leaves the values unperturbed.

    Returns:
        ValueHistogram of the expanded values (missing values dropped).
    """
    r = data.ranges if ranges is None else ranges
    scale = float(_noise_scale(r, cfg.w)[j])
    x = data.X[view.rows, j]
    known = ~np.isnan(x)
    x, w0, y = x[known], view.weights[known], data.y[view.rows][known]
    s = cfg.samples
    draws = np.repeat(x, s)
    if scale > 0:
        draws = draws + scale * as_rng(rng).generator.standard_normal(draws.size)
    return histogram_from_arrays(draws, np.repeat(w0, s) / s, np.repeat(y, s), data.n_classes)


def expand_training(train, cfg, rng):
    """Materializes all draws as an (N*s, M) matrix, instance-major."""
    s = cfg.samples
    scale = _noise_scale(train.ranges, cfg.w)
    X = np.repeat(train.X, s, axis=0)
    if np.any(scale > 0):
        X = X + scale[None, :] * as_rng(rng).generator.standard_normal(X.shape)
    return Dataset(X, np.repeat(train.y, s), train.attributes, train.class_names)


class UdtGrower(TreeGrower):
    """Hard induction where each instance is represented by its draws.

    Split search runs over all draws with weight ``w / samples`` each; an
    instance is routed left with the fraction of its draws below the
    threshold.
    """

    def __init__(self, data, cfg, udt, rng, stats=None):
        if cfg.propagation != "hard" or cfg.search != "hard":
            raise ValueError("the oversampling baseline uses hard search and propagation")
        super().__init__(data, cfg, stats)
        self.udt = udt
        self.expanded = expand_training(data, udt, rng)
        self.samples = self.expanded.X.reshape(data.n_rows, udt.samples, data.n_attributes)

    def find_split(self, view, depth):
        s = self.udt.samples
        w = np.repeat(dense_weights(view, self.data.n_rows), s) / s
        res = hard_scan(sorted_columns(self.expanded), w, np.arange(self.data.n_attributes),
                        self.cfg.min_branch_weight, self.stats, depth)
        return _select([res], self.data.n_attributes)

    def left_probs(self, view, j, threshold):
        draws = self.samples[view.rows, :, j]
        g = np.mean(draws < threshold, axis=1)
        g[np.isnan(draws[:, 0])] = np.nan
        return g


def train_udt(train, grow=None, prune=None, cfg=None, rng=None, stats=None):
    """Grows and prunes an oversampling-baseline tree.

    Args:
        train: Training dataset.
        grow: GrowConfig (must be hard search and propagation).
        prune: PruneConfig.
        cfg: UdtConfig.
        rng: RngStream for the draws.
        stats: Optional SearchStats.

    Returns:
        Pruned tree.
    """
    grow = grow or GrowConfig()
    cfg = cfg or UdtConfig()
    grower = UdtGrower(train, grow, cfg, rng, stats)
    tree = grower.grow()
    return ebp_prune(tree, train, prune or PruneConfig(), grow, router=grower.route)


def udt_eval_config(train, cfg):
    """Soft evaluation matching the baseline's noise model (std = w * range)."""
    if cfg.w == 0:
        return EvalConfig()
    return EvalConfig("soft", cfg.w, np.where(np.isfinite(train.ranges), train.ranges, 0.0))
