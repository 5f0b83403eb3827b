"""Hypercube-cluster synthetic classification data."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core_data import Dataset, RngStream, as_rng


@dataclass(frozen=True)
class SynthShape:
    name: str
    n_samples: int
    n_features: int
    n_classes: int

    @property
    def n_informative(self):
        return default_informative(self.n_features)


# Row, feature and class counts of the five benchmark synthetic suites.
SYNTHETIC_SHAPES = (
    SynthShape("synthetic1", 500, 15, 2),
    SynthShape("synthetic2", 400, 15, 2),
    SynthShape("synthetic3", 300, 20, 2),
    SynthShape("synthetic4", 200, 25, 3),
    SynthShape("synthetic5", 250, 20, 3),
)


def default_informative(n_features):
    return int(math.ceil(2 * n_features / 3))


def _distinct_vertices(n_vertices, dim, gen):
    if dim < 60:
        if n_vertices > 2 ** dim:
            raise ValueError("not enough hypercube vertices for the clusters")
        codes = gen.choice(2 ** dim, size=n_vertices, replace=False)
        return ((codes[:, None] >> np.arange(dim)) & 1).astype(float)
    seen, out = set(), []
    while len(out) < n_vertices:
        v = gen.integers(0, 2, size=dim)
        key = v.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(v)
    return np.array(out, dtype=float)


def _random_rotation(dim, gen):
    q, r = np.linalg.qr(gen.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def synth_guyon(n_samples, n_features, n_informative=None, n_classes=2, class_sep=1.0,
                rng=None, clusters_per_class=2, mean_level=4.0, flip_y=0.0):
    """Gaussian clusters on hypercube vertices, Guyon style.

    Each class owns ``clusters_per_class`` clusters centred on distinct
    vertices of a hypercube with side ``2 * class_sep`` in the informative
    subspace. Points get unit Gaussian scatter around their centroid, the
    informative block is then rotated by a random orthogonal matrix, and the
    remaining features are pure noise. Every column is finally shifted so
    its mean equals ``mean_level`` times its standard deviation; the noise
    and uncertainty models scale with attribute means, so columns centred
    on zero would make them meaningless.

    Args:
        n_samples: Number of rows.
        n_features: Total number of attributes.
        n_informative: Informative attributes; default ceil(2/3 features).
        n_classes: Number of classes.
        class_sep: Half the hypercube side.
        rng: RngStream or int seed.
        clusters_per_class: Clusters per class.
        mean_level: Column mean in units of its standard deviation.
        flip_y: Fraction of rows whose label is redrawn uniformly.

    Returns:
        Dataset with attributes x1..xM and classes "0".."K-1"; without
        label noise class sizes differ by at most one.
    """
    if n_informative is None:
        n_informative = default_informative(n_features)
    if not (1 <= n_informative <= n_features):
        raise ValueError("need 1 <= n_informative <= n_features")
    if n_classes < 2 or clusters_per_class < 1:
        raise ValueError("need at least 2 classes and 1 cluster per class")
    if n_samples < n_classes * clusters_per_class:
        raise ValueError("too few samples for the requested clusters")
    if not 0.0 <= flip_y <= 1.0:
        raise ValueError("flip_y must lie in [0, 1]")
    gen = as_rng(rng).generator
    n_clusters = n_classes * clusters_per_class
    centroids = (2.0 * _distinct_vertices(n_clusters, n_informative, gen) - 1.0) * class_sep
    class_sizes = np.full(n_classes, n_samples // n_classes)
    class_sizes[: n_samples % n_classes] += 1
    X = np.empty((n_samples, n_features))
    y = np.empty(n_samples, dtype=np.int64)
    start = 0
    for k in range(n_classes):
        per = np.full(clusters_per_class, class_sizes[k] // clusters_per_class)
        per[: class_sizes[k] % clusters_per_class] += 1
        for c in range(clusters_per_class):
            stop = start + per[c]
            centre = centroids[k * clusters_per_class + c]
            X[start:stop, :n_informative] = centre + gen.standard_normal((per[c], n_informative))
            y[start:stop] = k
            start = stop
    X[:, :n_informative] = X[:, :n_informative] @ _random_rotation(n_informative, gen)
    X[:, n_informative:] = gen.standard_normal((n_samples, n_features - n_informative))
    sd = X.std(axis=0, ddof=1)
    X += mean_level * sd - X.mean(axis=0)
    if flip_y > 0:
        # relabel a random subset uniformly at random (a label may stay the same)
        flip = gen.random(n_samples) < flip_y
        y[flip] = gen.integers(0, n_classes, size=int(flip.sum()))
    perm = gen.permutation(n_samples)
    return Dataset.from_arrays(X[perm], y[perm], class_names=[str(k) for k in range(n_classes)])


# Share of rows with a redrawn label in the benchmark suite. Without it the
# unpruned C4.5 trees are about as small as the 15-leaf calibration target
# and calibration pins the confidence factor at its upper bound.
SYNTHETIC_LABEL_NOISE = 0.05


def synthetic_dataset(shape, seed, replicate=0, class_sep=1.0, label_noise=SYNTHETIC_LABEL_NOISE):
    """One independently drawn dataset of a benchmark shape."""
    rng = RngStream(seed).derive("synthetic", shape.name, replicate)
    return synth_guyon(shape.n_samples, shape.n_features, shape.n_informative, shape.n_classes,
                       class_sep, rng, flip_y=label_noise)


def synthetic_suite(seed, replicate=0, shapes=SYNTHETIC_SHAPES, class_sep=1.0,
                    label_noise=SYNTHETIC_LABEL_NOISE):
    """One dataset per benchmark shape, keyed by name."""
    return {shape.name: synthetic_dataset(shape, seed, replicate, class_sep, label_noise)
            for shape in shapes}
