"""Noise-robustness protocols: permutations, CV tuning, fitting and scoring.

Experiment 1 injects noise into the training data, Experiment 2 into the
test data. Random streams are keyed by dataset, permutation, noise level
and fold but not by experiment or method, so both protocols coincide at
zero noise and records do not depend on execution order.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core_data import RngStream, add_gaussian_noise, stratified_folds, stratified_split
from ..inference import EvalConfig, accuracy
from ..pruning import PruneConfig, calibrate_confidence_for_target_leaves, ebp_prune
from ..split_search import SoftSearchConfig
from ..tree_induction import GrowConfig, TreeGrower, tree_leaf_count
from ..udt_baseline import UdtConfig, train_udt, udt_eval_config
from .synth import SYNTHETIC_SHAPES, synthetic_dataset

METHODS = ("C45", "SS", "STP", "SE", "UDT")
DEFAULT_U_GRID = (0.0, 0.025, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)
DEFAULT_W_GRID = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2)
DEFAULT_NOISE = (0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
C45 = GrowConfig()


def normalize_method(name):
    key = name.strip().upper().replace(".", "")
    if key not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return key


@dataclass(frozen=True)
class ExperimentPlan:
    """Settings of one experiment run.

    Attributes:
        experiment: 1 (noisy training data) or 2 (noisy test data).
        noise_factors: Noise levels n (std = n * attribute mean).
        permutations: Number of stratified train/test permutations.
        train_fraction: Share of rows used for training.
        methods: Subset of METHODS.
        grid: Tuning grid for the SS, STP and SE uncertainty factors.
        udt_grid: Tuning grid for the UDT range factor.
        udt_samples: Draws per measurement for UDT.
        folds: CV folds used for tuning.
        seed: Root seed.
        timing: Record wall-clock seconds (off gives reproducible files).
    """

    experiment: int = 1
    noise_factors: tuple = DEFAULT_NOISE
    permutations: int = 30
    train_fraction: float = 0.7
    methods: tuple = METHODS
    grid: tuple = DEFAULT_U_GRID
    udt_grid: tuple = DEFAULT_W_GRID
    udt_samples: int = 100
    folds: int = 10
    seed: int = 0
    timing: bool = True

    def __post_init__(self):
        if self.experiment not in (1, 2):
            raise ValueError("experiment must be 1 or 2")
        if not self.noise_factors or any(n < 0 for n in self.noise_factors):
            raise ValueError("noise factors must be nonnegative")
        if self.permutations < 2:
            raise ValueError("need at least 2 permutations")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train fraction must lie in (0, 1)")
        if not self.methods:
            raise ValueError("no methods")
        object.__setattr__(self, "methods", tuple(normalize_method(m) for m in self.methods))
        for g in (self.grid, self.udt_grid):
            if not g or any(v < 0 for v in g):
                raise ValueError("tuning grids must be non-empty and nonnegative")
        object.__setattr__(self, "grid", tuple(sorted(float(v) for v in self.grid)))
        object.__setattr__(self, "udt_grid", tuple(sorted(float(v) for v in self.udt_grid)))
        object.__setattr__(self, "noise_factors", tuple(float(v) for v in self.noise_factors))


@dataclass(frozen=True, eq=False)
class BenchmarkDataset:
    """A named dataset with its calibrated pruning confidence.

    ``replicates`` optionally holds one independently generated dataset per
    permutation (used for synthetic suites); otherwise ``data`` is split
    anew for every permutation.
    """

    name: str
    data: object
    confidence: float = 0.25
    replicates: tuple = ()

    def for_permutation(self, p):
        if self.replicates:
            return self.replicates[p % len(self.replicates)]
        return self.data


@dataclass
class RunRecord:
    dataset: str
    method: str
    noise: float
    permutation: int
    leaves: int
    accuracy: float
    param: Optional[float] = None
    seconds: Optional[float] = None

    def key(self):
        return (self.dataset, self.method, self.noise, self.permutation)


@dataclass
class FittedModel:
    tree: object
    eval_cfg: EvalConfig = field(default_factory=EvalConfig)

    @property
    def leaves(self):
        return tree_leaf_count(self.tree)

    def score(self, test):
        return accuracy(self.tree, test, self.eval_cfg)


def method_grow_config(method, param):
    """Growth settings of a method at a given parameter value."""
    if method == "SS" and param:
        return GrowConfig(search="soft", soft=SoftSearchConfig(u_s=param))
    if method == "STP" and param:
        return GrowConfig(propagation="soft", u_t=param)
    return C45


def method_eval_config(method, param, train):
    if method == "SE" and param:
        return EvalConfig("soft", param, train.means)
    return EvalConfig()


def fit_method(method, train, param, confidence, rng=None, udt_samples=100):
    """Grows, prunes and wraps a model for one method.

    Args:
        method: One of METHODS.
        train: Training dataset.
        param: Tuned parameter (ignored for C45).
        confidence: Pruning confidence factor.
        rng: RngStream for the UDT draws.
        udt_samples: UDT draws per measurement.
    """
    prune = PruneConfig(confidence)
    if method == "UDT":
        cfg = UdtConfig(param or 0.0, udt_samples)
        tree = train_udt(train, C45, prune, cfg, rng)
        return FittedModel(tree, udt_eval_config(train, cfg))
    grow = method_grow_config(method, param)
    tree = ebp_prune(TreeGrower(train, grow).grow(), train, prune, grow)
    return FittedModel(tree, method_eval_config(method, param, train))


def method_tree_key(method, param):
    """Hashable identity of the pruned tree a method fits (SE shares C4.5's)."""
    if method in ("C45", "SE") or not param:
        return ("C45",)
    return (method, float(param))


def cv_tune_parameter(train, method, grid, noise_side, n, rng, confidence=0.25, folds=10,
                      udt_samples=100, cache=None):
    """Selects the grid value with the best mean CV accuracy.

    Args:
        train: Training dataset of the permutation.
        method: SS, STP, SE or UDT.
        grid: Candidate values.
        noise_side: "train" adds noise to the CV training folds,
            "validation" to the held-out fold.
        n: Noise factor.
        rng: RngStream; folds derive from it, fold noise from it and ``n``.
        confidence: Pruning confidence factor.
        folds: Number of stratified folds.
        udt_samples: UDT draws per measurement.
        cache: Optional dict reused across calls with the same ``train``,
            ``rng`` and ``confidence`` to avoid refitting identical fold
            trees (e.g. the zero-parameter tree shared by all methods).

    Returns:
        The best value; ties go to the smaller value.

    Raises:
        DataError: When a class has fewer rows than folds.
    """
    if not len(grid):
        raise ValueError("empty grid")
    if noise_side not in ("train", "validation"):
        raise ValueError("noise_side must be 'train' or 'validation'")
    grid = sorted(float(v) for v in grid)
    if len(grid) == 1:
        return grid[0]
    rng = RngStream(rng) if isinstance(rng, int) else rng
    cache = {} if cache is None else cache
    fold_of = stratified_folds(train.y, folds, rng.derive("folds"))
    scores = np.zeros(len(grid))
    for f in range(folds):
        tr = train.subset(np.flatnonzero(fold_of != f))
        va = train.subset(np.flatnonzero(fold_of == f))
        noise_rng = rng.derive("noise", float(n), f)
        if noise_side == "train":
            tr = add_gaussian_noise(tr, n, noise_rng)
        else:
            va = add_gaussian_noise(va, n, noise_rng)
        # a fold tree depends on the noise level only when the training folds are noisy
        n_key = float(n) if noise_side == "train" and n > 0 else None
        for i, u in enumerate(grid):
            if method == "UDT":
                key = (f, n_key, "UDT", u)
            else:
                key = (f, n_key) + method_tree_key(method, u)
            if key not in cache:
                cache[key] = fit_method("C45" if method == "SE" else method, tr, u, confidence,
                                        rng.derive("udt", f, u), udt_samples).tree
            scores[i] += accuracy(cache[key], va, _tuning_eval_config(method, u, tr))
    return grid[int(np.argmax(scores))]


def _tuning_eval_config(method, param, train):
    if method == "UDT":
        return udt_eval_config(train, UdtConfig(param))
    return method_eval_config(method, param, train)


def _permutation_data(plan, ds, p):
    root = RngStream(plan.seed)
    return stratified_split(ds.for_permutation(p), plan.train_fraction,
                            root.derive("split", ds.name, p))


def run_cell(plan, ds, p, n, method, split=None, cache=None):
    """Runs one (dataset, permutation, noise, method) cell of the job grid.

    ``cache`` may be shared by the cells of one (dataset, permutation).
    """
    root = RngStream(plan.seed)
    train, test = split or _permutation_data(plan, ds, p)
    if plan.experiment == 1:
        train_n = add_gaussian_noise(train, n, root.derive("train-noise", ds.name, p, n))
        test_n, side = test, "train"
    else:
        test_n = add_gaussian_noise(test, n, root.derive("test-noise", ds.name, p, n))
        train_n, side = train, "validation"
    param = None
    if method != "C45":
        grid = plan.udt_grid if method == "UDT" else plan.grid
        param = cv_tune_parameter(train, method, grid, side, n, root.derive("cv", ds.name, p),
                                  ds.confidence, plan.folds, plan.udt_samples, cache)
    start = time.perf_counter()
    model = fit_method(method, train_n, param, ds.confidence,
                       root.derive("udt-final", ds.name, p, n), plan.udt_samples)
    acc = model.score(test_n)
    seconds = time.perf_counter() - start if plan.timing else None
    return RunRecord(ds.name, method, n, p, model.leaves, acc, param, seconds)


def _run_job(args):
    plan, ds, p = args
    split = _permutation_data(plan, ds, p)
    cache = {}
    return [run_cell(plan, ds, p, n, m, split, cache)
            for n in plan.noise_factors for m in plan.methods]


def run_experiment(plan, datasets, jobs=1, progress=None):
    """Runs the full job grid of a plan.

    Args:
        plan: ExperimentPlan.
        datasets: BenchmarkDataset sequence.
        jobs: Worker processes; 1 runs in-process.
        progress: Optional callback receiving each finished record list.

    Returns:
        Records ordered by dataset, permutation, noise and method.
    """
    work = [(plan, ds, p) for ds in datasets for p in range(plan.permutations)]
    out = []
    if jobs <= 1:
        for w in work:
            recs = _run_job(w)
            if progress:
                progress(recs)
            out.extend(recs)
        return out
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for recs in pool.map(_run_job, work):
            if progress:
                progress(recs)
            out.extend(recs)
    return out


def run_experiment1(plan, datasets, jobs=1, progress=None):
    """Experiment with noise added to the training data."""
    if plan.experiment != 1:
        raise ValueError("plan is not an experiment-1 plan")
    return run_experiment(plan, datasets, jobs, progress)


def run_experiment2(plan, datasets, jobs=1, progress=None):
    """Experiment with noise added to the test data."""
    if plan.experiment != 2:
        raise ValueError("plan is not an experiment-2 plan")
    return run_experiment(plan, datasets, jobs, progress)


def calibrate_benchmark(name, data, target=15, seed=0, replicates=(), folds=10):
    """Builds a BenchmarkDataset with a confidence factor calibrated on ``data``."""
    rng = RngStream(seed).derive("calibrate", name)
    cal = calibrate_confidence_for_target_leaves(data, target, C45, rng, folds)
    return BenchmarkDataset(name, data, cal.confidence, tuple(replicates)), cal


def synthetic_benchmarks(seed=0, permutations=30, target=15, folds=10, confidence=None,
                         shapes=SYNTHETIC_SHAPES):
    """Benchmark suite with a fresh synthetic dataset for every permutation.

    The confidence factor is calibrated on the first replicate unless
    ``confidence`` is given.

    Returns:
        List of (BenchmarkDataset, Calibration or None) pairs.
    """
    out = []
    for shape in shapes:
        reps = [synthetic_dataset(shape, seed, r) for r in range(permutations)]
        if confidence is not None:
            out.append((BenchmarkDataset(shape.name, reps[0], confidence, tuple(reps)), None))
        else:
            out.append(calibrate_benchmark(shape.name, reps[0], target, seed, reps, folds))
    return out


def confidence_sweep(train, test, methods, c_values, u_values, n_train, rng):
    """Leaves and accuracy over a grid of pruning confidence factors.

    Trees are grown once per method and pruned at every confidence value.

    Args:
        train: Training dataset.
        test: Clean test dataset.
        methods: Methods among C45, SS, STP, SE.
        c_values: Confidence factors.
        u_values: Mapping method -> uncertainty factor.
        n_train: Noise factor added to the training data.
        rng: RngStream for the training noise.

    Returns:
        List of (c, method, leaves, accuracy) tuples, c-major.
    """
    train_n = add_gaussian_noise(train, n_train, rng)
    grown = {}
    for m in methods:
        m = normalize_method(m)
        if m == "UDT":
            raise ValueError("the sweep covers C45, SS, STP and SE")
        u = float(u_values.get(m, 0.0)) if m != "C45" else 0.0
        grow = method_grow_config(m, u)
        grown[m] = (TreeGrower(train_n, grow).grow(), grow, method_eval_config(m, u, train_n))
    rows = []
    for c in c_values:
        for m, (tree, grow, ev) in grown.items():
            pruned = ebp_prune(tree, train_n, PruneConfig(c), grow)
            rows.append((float(c), m, tree_leaf_count(pruned), accuracy(pruned, test, ev)))
    return rows
