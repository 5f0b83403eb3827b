"""Prediction with hard routing or soft evaluation (probabilistic mixing)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tree_induction import Internal, Leaf, iter_nodes, left_probabilities

EVAL_MODES = ("hard", "soft")


@dataclass(frozen=True, eq=False)
class EvalConfig:
    """Prediction settings.

    Attributes:
        mode: "hard" follows one path per instance; "soft" mixes both
            children by the Gaussian gating probability at every split.
        u_e: Evaluation uncertainty factor; sigma_j = u_e * means[j].
        means: Per-attribute scale taken from the training data.
    """

    mode: str = "hard"
    u_e: float = 0.0
    means: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in EVAL_MODES:
            raise ValueError(f"unknown evaluation mode {self.mode!r}")
        if self.u_e < 0:
            raise ValueError("u_e must be nonnegative")
        if self.mode == "hard" and self.u_e != 0:
            raise ValueError("u_e requires soft evaluation")
        if self.means is not None:
            m = np.asarray(self.means, dtype=float)
            if not np.all(np.isfinite(m)):
                raise ValueError("attribute means must be finite")
            object.__setattr__(self, "means", m)
        elif self.mode == "soft" and self.u_e > 0:
            raise ValueError("soft evaluation needs training attribute means")

    def sigma(self, j):
        if self.mode != "soft" or self.u_e == 0:
            return 0.0
        s = self.u_e * self.means[j]
        return float(s) if s > 0 else 0.0


def _n_classes(tree):
    for n in iter_nodes(tree):
        if isinstance(n, Leaf):
            return n.probs.size
    raise ValueError("tree without leaves")


def _max_attribute(tree):
    return max((n.attribute for n in iter_nodes(tree) if isinstance(n, Internal)), default=-1)


def predict_proba_many(tree, X, cfg=None):
    """Class probabilities for every row of ``X``.

    Args:
        tree: Root node.
        X: (n, M) matrix, NaN for missing.
        cfg: EvalConfig (hard by default).

    Returns:
        (n, K) array whose rows sum to 1.

    Raises:
        ValueError: If ``X`` has the wrong number of attributes.
    """
    cfg = cfg or EvalConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if cfg.means is not None and X.shape[1] != cfg.means.size:
        raise ValueError(f"expected {cfg.means.size} attributes, got {X.shape[1]}")
    if X.shape[1] <= _max_attribute(tree):
        raise ValueError("instance has fewer attributes than the tree uses")
    out = np.zeros((X.shape[0], _n_classes(tree)))

    def walk(node, idx, w):
        if isinstance(node, Leaf):
            out[idx] += w[:, None] * node.probs
            return
        g = left_probabilities(X[idx, node.attribute], node.threshold,
                               cfg.sigma(node.attribute))
        g = np.where(np.isnan(g), node.left_fraction, g)
        lw = w * g
        rw = w - lw
        keep = lw > 0
        if keep.any():
            walk(node.left, idx[keep], lw[keep])
        keep = rw > 0
        if keep.any():
            walk(node.right, idx[keep], rw[keep])

    walk(tree, np.arange(X.shape[0]), np.ones(X.shape[0]))
    return out


def predict_proba(tree, x, cfg=None):
    """Class probabilities of a single instance."""
    return predict_proba_many(tree, np.asarray(x, dtype=float)[None, :], cfg)[0]


def classify_many(tree, X, cfg=None):
    """Argmax class per row; ties go to the smaller class id."""
    return np.argmax(predict_proba_many(tree, X, cfg), axis=1)


def classify(tree, x, cfg=None):
    return int(np.argmax(predict_proba(tree, x, cfg)))


def accuracy(tree, test, cfg=None):
    """Fraction of ``test`` rows whose predicted class equals the label."""
    if test.n_rows == 0:
        raise ValueError("empty test set")
    return float(np.mean(classify_many(tree, test.X, cfg) == test.y))
