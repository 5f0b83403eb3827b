"""Error-based pruning with Clopper-Pearson upper limits, and calibration of
the confidence factor to a target tree size."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import betaincinv

from .core_data import WeightedIndexSet, as_rng, stratified_folds
from .tree_induction import GrowConfig, Internal, Leaf, TreeGrower, tree_leaf_count

SCENARIOS = ("leaf", "lift", "keep")


@dataclass(frozen=True)
class PruneConfig:
    confidence: float = 0.25
    enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError("confidence factor must lie in (0, 1]")


class ErrorEstimate(NamedTuple):
    errors: float
    scenario: str


@lru_cache(maxsize=65536)
def _upper(e, n, c):
    if e == 0:
        return 1.0 - (0.5 * c) ** (1.0 / n)
    # P(X <= e; n, p) = I_{1-p}(n-e, e+1) = c/2  <=>  I_p(e+1, n-e) = 1 - c/2
    return float(betaincinv(e + 1.0, n - e, 1.0 - 0.5 * c))


def clopper_pearson_upper(errors, n, c):
    """Upper Clopper-Pearson limit of an error rate.

    The error count is rounded half-up; the limit is the ``p`` at which the
    binomial probability of at most that many errors in ``n`` trials drops
    to ``c / 2``. Fractional ``n`` is handled through the incomplete beta
    function.

    Args:
        errors: Observed (possibly fractional) errors, 0 <= errors <= n.
        n: Number of (possibly fractional) instances, > 0.
        c: Confidence factor in (0, 1].
    """
    if not n > 0:
        raise ValueError("n must be positive")
    if errors < 0 or errors > n * (1 + 1e-12):
        raise ValueError("errors must lie in [0, n]")
    if not 0.0 < c <= 1.0:
        raise ValueError("confidence factor must lie in (0, 1]")
    e = math.floor(errors + 0.5)
    if e >= n:
        return 1.0
    return _upper(int(e), float(n), float(c))


def leaf_error_estimate(counts, c):
    """Pessimistic error count of a node turned into a leaf."""
    n = float(np.sum(counts))
    if n <= 0:
        return 0.0
    errors = max(n - float(np.max(counts)), 0.0)
    return n * clopper_pearson_upper(errors, n, c)


def _default_router(train, grow):
    return TreeGrower(train, grow or GrowConfig()).route


def _leaf_sum(node, view, c, router, counts_of):
    if isinstance(node, Leaf):
        return leaf_error_estimate(counts_of(view), c)
    lv, rv = router(node, view)
    return (_leaf_sum(node.left, lv, c, router, counts_of)
            + _leaf_sum(node.right, rv, c, router, counts_of))


def _counts_fn(train):
    y, K = train.y, train.n_classes
    return lambda view: view.class_weights(y, K)


def subtree_error_estimate(node, view, cfg, train, grow=None, router=None):
    """Smallest pessimistic error among keeping, collapsing and lifting.

    Args:
        node: Subtree root.
        view: Training view reaching the node.
        cfg: PruneConfig.
        train: Training dataset the view indexes.
        grow: GrowConfig whose propagation routes the view.
        router: Optional custom ``(node, view) -> (left, right)``.

    Returns:
        ErrorEstimate; ties prefer leaf, then lift, then keep.
    """
    router = router or _default_router(train, grow)
    counts_of = _counts_fn(train)
    c = cfg.confidence
    leaf = leaf_error_estimate(counts_of(view), c)
    if isinstance(node, Leaf):
        return ErrorEstimate(leaf, "leaf")
    keep = _leaf_sum(node, view, c, router, counts_of)
    big = node.left if node.left_weight >= node.right_weight else node.right
    lift = _leaf_sum(big, view, c, router, counts_of)
    best = min((leaf, 0), (lift, 1), (keep, 2))
    return ErrorEstimate(best[0], SCENARIOS[best[1]])


def ebp_prune(tree, train, cfg=None, grow=None, router=None):
    """Bottom-up error-based pruning.

    The training view is routed with the growth propagation mode, so soft
    propagation prunes on fractional error counts. Leaves of the result
    carry the routed class counts with fresh Laplace probabilities.

    Args:
        tree: Tree grown on ``train``.
        train: Training dataset.
        cfg: PruneConfig; disabled configs return the tree unchanged.
        grow: GrowConfig used for growth.
        router: Optional custom routing function.

    Returns:
        Pruned tree (a new object; the input is not modified).
    """
    cfg = cfg or PruneConfig()
    if not cfg.enabled:
        return tree
    router = router or _default_router(train, grow)
    counts_of = _counts_fn(train)
    c = cfg.confidence

    def prune(node, view):
        counts = counts_of(view)
        leaf_est = leaf_error_estimate(counts, c)
        if isinstance(node, Leaf):
            return Leaf.from_counts(counts), leaf_est
        lv, rv = router(node, view)
        left, le = prune(node.left, lv)
        right, re_ = prune(node.right, rv)
        keep_est = le + re_
        big = left if node.left_weight >= node.right_weight else right
        lift_est = _leaf_sum(big, view, c, router, counts_of)
        if leaf_est <= keep_est and leaf_est <= lift_est:
            return Leaf.from_counts(counts), leaf_est
        if lift_est <= keep_est:
            return prune(big, view)
        return Internal(node.attribute, node.threshold, left, right, node.left_weight,
                        node.right_weight, counts), keep_est

    return prune(tree, WeightedIndexSet.full(train.n_rows))[0]


class Calibration(NamedTuple):
    confidence: float
    target: int
    mean_leaves: float


def _fold_trees(train, grow, rng, n_folds):
    folds = stratified_folds(train.y, n_folds, rng)
    out = []
    for f in range(n_folds):
        sub = train.subset(np.flatnonzero(folds != f))
        out.append((TreeGrower(sub, grow).grow(), sub))
    return out


def mean_pruned_leaves(fold_trees, c, grow):
    cfg = PruneConfig(c)
    return float(np.mean([tree_leaf_count(ebp_prune(t, sub, cfg, grow)) for t, sub in fold_trees]))


def calibrate_confidence_for_target_leaves(train, target=15, grow=None, rng=None, n_folds=10,
                                           fallbacks=(10, 5), max_steps=20, c_range=(1e-4, 0.9999)):
    """Bisects the confidence factor so pruned CV trees average ``target`` leaves.

    Unpruned fold trees are grown once and re-pruned at each step. When the
    unpruned trees average fewer leaves than the target, the next fallback
    target is used.

    Args:
        train: Dataset to cross-validate on.
        target: Desired mean leaf count (>= 2).
        grow: GrowConfig of the trees (plain C4.5 by default).
        rng: RngStream for the fold assignment.
        n_folds: Number of stratified folds.
        fallbacks: Smaller targets tried in order.
        max_steps: Bisection steps.
        c_range: Search interval for the confidence factor.

    Returns:
        Calibration(confidence, target actually used, mean leaves at it).

    Raises:
        DataError: When a class has fewer rows than folds.
    """
    if target < 2:
        raise ValueError("target must be at least 2")
    grow = grow or GrowConfig()
    trees = _fold_trees(train, grow, as_rng(rng), n_folds)
    unpruned = float(np.mean([tree_leaf_count(t) for t, _ in trees]))
    chosen = target
    for t in [target] + [f for f in fallbacks if f < target]:
        chosen = t
        if unpruned >= t:
            break
    lo, hi = c_range
    cache = {}

    def leaves(c):
        if c not in cache:
            cache[c] = mean_pruned_leaves(trees, c, grow)
        return cache[c]

    best = min(((abs(leaves(c) - chosen), c) for c in (lo, hi)))
    if leaves(hi) <= chosen or leaves(lo) >= chosen:
        return Calibration(best[1], chosen, leaves(best[1]))
    for _ in range(max_steps):
        if best[0] <= 1.0:
            break
        mid = 0.5 * (lo + hi)
        m = leaves(mid)
        best = min(best, (abs(m - chosen), mid))
        if m < chosen:
            lo = mid
        else:
            hi = mid
    return Calibration(best[1], chosen, leaves(best[1]))
