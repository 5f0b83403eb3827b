"""Top-down tree growth with hard or soft (fractional) propagation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import ndtr

from .core_data import DataError, WeightedIndexSet
from .split_search import (
    SoftSearchConfig,
    best_split_all_attributes,
    dense_weights,
    normal_cdf,
)

PROPAGATION_MODES = ("hard", "soft")
SEARCH_MODES = ("hard", "soft")


@dataclass(frozen=True)
class GrowConfig:
    """Tree growth settings.

    Attributes:
        propagation: "hard" sends each training row to one child; "soft"
            splits its weight by the Gaussian gating probability.
        u_t: Propagation uncertainty factor (sigma_j = u_t * mean_j).
        min_branch_weight: Minimum weight each child must receive.
        max_depth: Depth limit, None for unlimited.
        search: "hard" or "soft" threshold search.
        soft: Soft search settings.
        purity: A node whose majority class holds this fraction of the
            weight becomes a leaf.
    """

    propagation: str = "hard"
    u_t: float = 0.0
    min_branch_weight: float = 2.0
    max_depth: Optional[int] = None
    search: str = "hard"
    soft: SoftSearchConfig = field(default_factory=SoftSearchConfig)
    purity: float = 0.999

    def __post_init__(self):
        if self.propagation not in PROPAGATION_MODES:
            raise ValueError(f"unknown propagation {self.propagation!r}")
        if self.search not in SEARCH_MODES:
            raise ValueError(f"unknown search {self.search!r}")
        if self.u_t < 0:
            raise ValueError("u_t must be nonnegative")
        if self.propagation == "hard" and self.u_t != 0:
            raise ValueError("u_t requires soft propagation")
        if self.min_branch_weight < 0:
            raise ValueError("min_branch_weight must be nonnegative")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative")


def laplace(counts):
    counts = np.asarray(counts, dtype=float)
    return (counts + 1.0) / (counts.sum() + counts.size)


@dataclass(eq=False)
class Leaf:
    counts: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_counts(cls, counts):
        counts = np.asarray(counts, dtype=float)
        return cls(counts, laplace(counts))


@dataclass(eq=False)
class Internal:
    attribute: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    left_weight: float
    right_weight: float
    counts: np.ndarray

    @property
    def left_fraction(self):
        return self.left_weight / (self.left_weight + self.right_weight)


TreeNode = Union[Leaf, Internal]


def gating_weight(x, threshold, sigma, left_fraction=0.5):
    """Probability that a value is routed to the left branch.

    Args:
        x: Observed value; NaN or None for missing.
        threshold: Split threshold.
        sigma: Noise standard deviation; 0 gives the hard indicator.
        left_fraction: Left share used for missing values.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if x is None or np.isnan(x):
        return float(left_fraction)
    if sigma == 0:
        return 1.0 if x < threshold else 0.0
    return normal_cdf((threshold - x) / sigma)


def left_probabilities(x, threshold, sigma):
    """Vectorized gating probabilities; NaN stays NaN."""
    if sigma > 0:
        with np.errstate(over="ignore"):
            return ndtr((threshold - x) / sigma)
    g = (x < threshold).astype(float)
    g[np.isnan(x)] = np.nan
    return g


def split_view(view, g, left_fraction):
    """Divides each entry's weight by left probabilities ``g``.

    NaN entries of ``g`` (missing values) use ``left_fraction``.
    """
    g = np.where(np.isnan(g), left_fraction, g)
    lw = view.weights * g
    rw = view.weights - lw
    return WeightedIndexSet(view.rows, lw), WeightedIndexSet(view.rows, rw)


def _known_branch_weights(view, g):
    known = ~np.isnan(g)
    lw = float(np.sum(view.weights[known] * g[known]))
    kw = float(np.sum(view.weights[known]))
    return lw, kw - lw


class TreeGrower:
    """Recursive grower; subclasses replace the search and routing steps."""

    def __init__(self, data, cfg, stats=None):
        if data.n_rows < 1:
            raise DataError("empty training set")
        self.data = data
        self.cfg = cfg
        self.stats = stats
        self.means = data.means
        self.prop_sigma = cfg.u_t * self.means if cfg.propagation == "soft" else None

    def sigma_for(self, j):
        if self.prop_sigma is None:
            return 0.0
        s = self.prop_sigma[j]
        return float(s) if s > 0 else 0.0

    def root_view(self):
        return WeightedIndexSet.full(self.data.n_rows)

    def find_split(self, view, depth):
        cfg = self.cfg
        dense = dense_weights(view, self.data.n_rows)
        return best_split_all_attributes(self.data, view, cfg.search, cfg.soft,
                                         cfg.min_branch_weight, self.stats, depth,
                                         means=self.means, dense=dense)

    def left_probs(self, view, j, threshold):
        x = self.data.X[view.rows, j]
        return left_probabilities(x, threshold, self.sigma_for(j))

    def route(self, node, view):
        """Children views of ``view`` under a grown internal node."""
        g = self.left_probs(view, node.attribute, node.threshold)
        return split_view(view, g, node.left_fraction)

    def node_counts(self, view):
        return view.class_weights(self.data.y, self.data.n_classes)

    def grow(self, view=None):
        return self._grow(self.root_view() if view is None else view, 0)

    def _grow(self, view, depth):
        cfg = self.cfg
        counts = self.node_counts(view)
        total = counts.sum()
        mbw = cfg.min_branch_weight
        if (total <= 0 or counts.max() >= cfg.purity * total
                or (cfg.max_depth is not None and depth >= cfg.max_depth)
                or total < 2 * mbw * (1 - 1e-9)):
            return Leaf.from_counts(counts)
        split = self.find_split(view, depth)
        if split is None:
            return Leaf.from_counts(counts)
        j, tau = split.attribute, split.threshold
        g = self.left_probs(view, j, tau)
        wl, wr = _known_branch_weights(view, g)
        if wl + wr <= 0:
            return Leaf.from_counts(counts)
        lv, rv = split_view(view, g, wl / (wl + wr))
        floor = max(mbw * (1 - 1e-9), 0.0)
        if len(lv) == 0 or len(rv) == 0 or lv.total < floor or rv.total < floor:
            return Leaf.from_counts(counts)
        left = self._grow(lv, depth + 1)
        right = self._grow(rv, depth + 1)
        return Internal(j, float(tau), left, right, wl, wr, counts)


def grow_tree(train, cfg=None, stats=None):
    """Grows an unpruned tree on ``train``."""
    return TreeGrower(train, cfg or GrowConfig(), stats).grow()


def iter_nodes(node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Internal):
            stack.append(n.right)
            stack.append(n.left)


def tree_leaf_count(node):
    return sum(1 for n in iter_nodes(node) if isinstance(n, Leaf))


def tree_depth(node):
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def trees_equal(a, b):
    """Exact structural equality: attributes, thresholds and leaf counts."""
    if isinstance(a, Leaf) and isinstance(b, Leaf):
        return np.array_equal(a.counts, b.counts) and np.array_equal(a.probs, b.probs)
    if isinstance(a, Internal) and isinstance(b, Internal):
        return (a.attribute == b.attribute and a.threshold == b.threshold
                and a.left_weight == b.left_weight and a.right_weight == b.right_weight
                and trees_equal(a.left, b.left) and trees_equal(a.right, b.right))
    return False


def _fmt(v):
    return repr(float(v))


def _fmt_list(vs):
    return ",".join(_fmt(v) for v in vs)


def dump_tree(node):
    """Serializes a tree, one node per line in preorder, two-space indent.

    Floats use the shortest round-trip representation so loading restores
    the exact values.
    """
    lines = []

    def walk(n, depth):
        pad = "  " * depth
        if isinstance(n, Leaf):
            lines.append(f"{pad}leaf counts={_fmt_list(n.counts)} probs={_fmt_list(n.probs)}")
        else:
            lines.append(f"{pad}split attribute={n.attribute} threshold={_fmt(n.threshold)} "
                         f"left_weight={_fmt(n.left_weight)} right_weight={_fmt(n.right_weight)} "
                         f"counts={_fmt_list(n.counts)}")
            walk(n.left, depth + 1)
            walk(n.right, depth + 1)

    walk(node, 0)
    return "\n".join(lines) + "\n"


def _parse_fields(text, lineno):
    out = {}
    for tok in text.split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: malformed field {tok!r}")
        out[key] = val
    return out


def load_tree(text):
    """Inverse of :func:`dump_tree`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    pos = 0

    def parse(depth):
        nonlocal pos
        if pos >= len(lines):
            raise ValueError("truncated tree")
        line = lines[pos]
        indent = len(line) - len(line.lstrip(" "))
        if indent != 2 * depth:
            raise ValueError(f"line {pos + 1}: bad indentation")
        kind, _, rest = line.strip().partition(" ")
        f = _parse_fields(rest, pos + 1)
        pos += 1
        if kind == "leaf":
            return Leaf(np.array([float(v) for v in f["counts"].split(",")]),
                        np.array([float(v) for v in f["probs"].split(",")]))
        if kind != "split":
            raise ValueError(f"line {pos}: unknown node kind {kind!r}")
        left = parse(depth + 1)
        right = parse(depth + 1)
        return Internal(int(f["attribute"]), float(f["threshold"]), left, right,
                        float(f["left_weight"]), float(f["right_weight"]),
                        np.array([float(v) for v in f["counts"].split(",")]))

    root = parse(0)
    if pos != len(lines):
        raise ValueError("trailing lines after tree")
    return root
