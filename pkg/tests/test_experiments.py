import itertools
import math

import numpy as np
import pytest
from scipy.stats import rankdata

from softdt.core_data import RngStream, stratified_split
from softdt.experiments.protocol import (BenchmarkDataset, ExperimentPlan, RunRecord,
                                         calibrate_benchmark, confidence_sweep,
                                         cv_tune_parameter, fit_method, method_tree_key,
                                         normalize_method, run_cell, run_experiment,
                                         run_experiment1, run_experiment2,
                                         synthetic_benchmarks)
from softdt.experiments.reports import (format_table, read_results, summarize, write_reports,
                                        write_results)
from softdt.experiments.stats import standardize, standardize_metrics, wilcoxon_signed_rank
from softdt.experiments.synth import (SYNTHETIC_SHAPES, synth_guyon, synthetic_dataset,
                                     synthetic_suite)
from softdt.experiments.toy import (prob_order_preserved, prob_test_left_of_midpoint,
                                    toy_misclassification_prob, toy_monte_carlo)
from softdt.experiments.validation import check_density_oracle, check_toy_thresholds


# --- Wilcoxon ---------------------------------------------------------------------

def enumeration_pvalue(a, b):
    """Two-sided p by listing all 2^n sign patterns of the nonzero differences."""
    d = np.asarray(a, float) - np.asarray(b, float)
    d = d[d != 0]
    r = rankdata(np.abs(d))
    w = min(r[d > 0].sum(), r[d < 0].sum())
    hits = 0
    for signs in itertools.product((0, 1), repeat=d.size):
        s = float(np.dot(signs, r))
        if min(s, r.sum() - s) <= w + 1e-9:
            hits += 1
    return min(1.0, hits / 2 ** d.size)


def test_wilcoxon_exact_matches_enumeration():
    gen = RngStream(0).generator
    checked = 0
    while checked < 50:
        n = int(gen.integers(5, 13))
        # one decimal so that tied magnitudes and zero differences occur
        a = np.round(gen.normal(size=n), 1)
        b = np.round(gen.normal(0.3, size=n), 1)
        if np.count_nonzero(a - b) < 5:
            continue
        checked += 1
        res = wilcoxon_signed_rank(a, b)
        assert res.exact
        assert res.pvalue == pytest.approx(enumeration_pvalue(a, b), abs=1e-12)


def test_wilcoxon_symmetric_and_example():
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    b = np.zeros(6)
    res = wilcoxon_signed_rank(a, b)
    assert res.statistic == 0 and res.pvalue == pytest.approx(2 / 64)
    assert wilcoxon_signed_rank(b, a).pvalue == res.pvalue


def test_wilcoxon_normal_branch():
    gen = RngStream(1).generator
    a, b = gen.normal(size=40), gen.normal(size=40)
    res = wilcoxon_signed_rank(a, b)
    assert not res.exact and 0 < res.pvalue <= 1


@pytest.mark.parametrize("a,b", [([1, 2], [1, 2, 3]), ([1, 1, 1, 1, 1], [1, 1, 1, 1, 1]),
                                 ([1, 2, 3], [0, 0, 0])])
def test_wilcoxon_errors(a, b):
    with pytest.raises(ValueError):
        wilcoxon_signed_rank(a, b)


# --- standardization ------------------------------------------------------------------

def test_standardize_example():
    assert standardize(12.0, 15.0, 3.0) == -1.0
    assert standardize(19.5, 15.0, 3.0) == 1.5
    with pytest.raises(ValueError):
        standardize(1.0, 1.0, 0.0)


def _records(leaves_by_method, dataset="d"):
    return [RunRecord(dataset, m, n, p, v, 0.5 + 0.01 * v)
            for (m, n), vals in leaves_by_method.items() for p, v in enumerate(vals)]


def test_standardize_metrics_baseline():
    recs = _records({("C45", 0.0): [12, 15, 18], ("SS", 0.0): [12, 13, 15]})
    z = standardize_metrics(recs, "leaves")
    assert z.baseline_mean["d"] == 15.0 and z.baseline_std["d"] == 3.0
    np.testing.assert_allclose(z.values, [-1, 0, 1, -1, -2 / 3, 0])


def test_standardize_metrics_zero_std():
    recs = _records({("C45", 0.0): [5, 5]})
    with pytest.raises(ValueError):
        standardize_metrics(recs, "leaves")
    z = standardize_metrics(recs, "leaves", on_zero_std="flag")
    assert z.unusable == {"d"} and np.all(np.isnan(z.values))


# --- toy analysis -------------------------------------------------------------------------

def test_toy_limits():
    assert prob_order_preserved(1e-3) == 1.0
    assert toy_misclassification_prob(1e-3) == pytest.approx(0.0, abs=1e-12)
    assert toy_misclassification_prob(1e4) == pytest.approx(0.5, abs=1e-3)
    assert prob_test_left_of_midpoint(1.0, 1.0, "both-uncertain") == pytest.approx(
        1 - 0.5 * math.erfc(-math.sqrt(2 / 3) / math.sqrt(2)), abs=1e-15)


def test_toy_monotone_in_sigma():
    for mode in ("train-uncertain", "both-uncertain"):
        p = [toy_misclassification_prob(s, 1.0, mode) for s in (0.25, 0.5, 1, 2, 4)]
        assert all(a < b for a, b in zip(p, p[1:]))


@pytest.mark.parametrize("mode", ["train-uncertain", "both-uncertain"])
def test_toy_monte_carlo_agrees(mode):
    mc, se = toy_monte_carlo(1.0, 1.0, mode, 200_000, RngStream(0))
    assert abs(mc - toy_misclassification_prob(1.0, 1.0, mode)) < 5 * se


def test_toy_errors():
    with pytest.raises(ValueError):
        prob_order_preserved(0.0)
    with pytest.raises(ValueError):
        toy_misclassification_prob(1.0, 1.0, "nope")


# --- synthetic data ----------------------------------------------------------------------

def test_synth_shapes_and_balance():
    clean = synthetic_suite(0, label_noise=0.0)
    noisy = synthetic_suite(0)
    assert list(clean) == list(noisy) == [s.name for s in SYNTHETIC_SHAPES]
    for shape in SYNTHETIC_SHAPES:
        for d in (clean[shape.name], noisy[shape.name]):
            assert d.X.shape == (shape.n_samples, shape.n_features)
            np.testing.assert_allclose(d.X.mean(axis=0), 4 * d.X.std(axis=0, ddof=1))
        counts = np.bincount(clean[shape.name].y)
        assert counts.size == shape.n_classes and counts.max() - counts.min() <= 1


def test_label_noise_relabels_expected_share():
    clean = synth_guyon(4000, 6, 4, 2, 1.0, RngStream(5))
    noisy = synth_guyon(4000, 6, 4, 2, 1.0, RngStream(5), flip_y=0.2)
    # same feature rows (in a different order); match them through the first column
    a, b = np.argsort(clean.X[:, 0]), np.argsort(noisy.X[:, 0])
    np.testing.assert_array_equal(clean.X[a], noisy.X[b])
    # a uniform redraw over 2 classes changes the label half the time
    changed = np.mean(clean.y[a] != noisy.y[b])
    assert 0.085 < changed < 0.115
    with pytest.raises(ValueError):
        synth_guyon(100, 4, 2, 2, 1.0, RngStream(0), flip_y=1.5)


def test_synthetic_replicates_differ_and_are_deterministic():
    shape = SYNTHETIC_SHAPES[0]
    a0 = synthetic_dataset(shape, 0, 0)
    a1 = synthetic_dataset(shape, 0, 1)
    assert not np.array_equal(a0.X, a1.X)
    np.testing.assert_array_equal(a0.X, synthetic_dataset(shape, 0, 0).X)
    assert np.array_equal(synthetic_suite(0)[shape.name].X, a0.X)


def test_synthetic_benchmarks_fixed_confidence():
    pairs = synthetic_benchmarks(0, 3, confidence=0.3, shapes=SYNTHETIC_SHAPES[:2])
    assert [ds.name for ds, _ in pairs] == [s.name for s in SYNTHETIC_SHAPES[:2]]
    for ds, cal in pairs:
        assert cal is None and ds.confidence == 0.3 and len(ds.replicates) == 3
        assert ds.for_permutation(2) is ds.replicates[2]
        assert ds.data is ds.replicates[0]


def test_synth_deterministic_and_informative():
    a = synth_guyon(200, 8, 4, 2, 1.0, RngStream(3))
    b = synth_guyon(200, 8, 4, 2, 1.0, RngStream(3))
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    with pytest.raises(ValueError):
        synth_guyon(200, 3, 5)


# --- protocol ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_suite():
    out = []
    for i, (n, m, k) in enumerate([(90, 4, 2), (80, 5, 3)]):
        d = synth_guyon(n, m, 3, k, 1.0, RngStream(100 + i))
        out.append(BenchmarkDataset(f"s{i}", d, 0.25))
    return out


def test_cv_tune_single_value_and_ties(small_synth):
    assert cv_tune_parameter(small_synth, "SS", [0.3], "train", 0.0, RngStream(0)) == 0.3
    # SE with huge u values all evaluate to the same prior-like predictions
    grid = [0.0, 1e-12, 2e-12]
    assert cv_tune_parameter(small_synth, "SE", grid, "validation", 0.0, RngStream(0),
                             folds=3) == 0.0
    with pytest.raises(ValueError):
        cv_tune_parameter(small_synth, "SS", [], "train", 0.0, RngStream(0))


def test_cv_tune_cache_is_transparent(small_synth):
    cache = {}
    grid = [0.0, 0.1, 0.3]
    a = cv_tune_parameter(small_synth, "STP", grid, "train", 0.1, RngStream(4), folds=3,
                          cache=cache)
    b = cv_tune_parameter(small_synth, "STP", grid, "train", 0.1, RngStream(4), folds=3)
    assert a == b and len(cache) == 9


def test_method_names_and_keys():
    assert normalize_method("c45") == "C45" and normalize_method("stp") == "STP"
    with pytest.raises(ValueError):
        normalize_method("rf")
    assert method_tree_key("SE", 0.2) == method_tree_key("C45", None)
    assert method_tree_key("SS", 0.0) == ("C45",)


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(3)
    with pytest.raises(ValueError):
        ExperimentPlan(noise_factors=(-0.1,))
    with pytest.raises(ValueError):
        ExperimentPlan(permutations=1)
    assert ExperimentPlan(grid=(0.3, 0.0)).grid == (0.0, 0.3)


def _plan(exp, **kw):
    base = dict(noise_factors=(0.0,), permutations=2, methods=("C45", "SS", "STP", "SE", "UDT"),
                grid=(0.0, 0.2), udt_grid=(0.0, 0.05), udt_samples=5, folds=3, timing=False)
    base.update(kw)
    return ExperimentPlan(exp, **base)


def test_experiments_agree_without_noise(tiny_suite):
    a = run_experiment1(_plan(1), tiny_suite)
    b = run_experiment2(_plan(2), tiny_suite)
    assert a == b
    assert len(a) == 2 * 2 * 5
    with pytest.raises(ValueError):
        run_experiment1(_plan(2), tiny_suite)


def test_records_independent_of_method_order(tiny_suite):
    a = run_experiment(_plan(1, methods=("C45", "SS", "STP"), noise_factors=(0.0, 0.1)),
                       tiny_suite)
    b = run_experiment(_plan(1, methods=("STP", "C45", "SS"), noise_factors=(0.0, 0.1)),
                       tiny_suite)
    assert sorted(a, key=RunRecord.key) == sorted(b, key=RunRecord.key)


def test_parallel_matches_serial(tiny_suite):
    plan = _plan(2, methods=("C45", "SE"), noise_factors=(0.0, 0.2))
    assert run_experiment(plan, tiny_suite, jobs=2) == run_experiment(plan, tiny_suite)


def test_noise_side(tiny_suite):
    ds = tiny_suite[0]
    r1 = run_cell(_plan(1, noise_factors=(0.3,)), ds, 0, 0.3, "C45")
    r2 = run_cell(_plan(2, noise_factors=(0.3,)), ds, 0, 0.3, "C45")
    r0 = run_cell(_plan(1), ds, 0, 0.0, "C45")
    # test-side noise leaves the tree untouched
    assert r2.leaves == r0.leaves
    assert r1.param is None and r1.seconds is None


def test_fit_method_models(small_synth):
    se = fit_method("SE", small_synth, 0.2, 0.25)
    c45 = fit_method("C45", small_synth, None, 0.25)
    assert se.leaves == c45.leaves and se.eval_cfg.mode == "soft"
    assert 0 <= se.score(small_synth) <= 1


def test_calibrate_benchmark_deterministic(small_synth):
    a, cal = calibrate_benchmark("x", small_synth, 8, seed=1)
    b, _ = calibrate_benchmark("x", small_synth, 8, seed=1)
    assert a.confidence == b.confidence == cal.confidence


def test_confidence_sweep(small_synth):
    train, test = stratified_split(small_synth, 0.7, RngStream(0))
    cs = [0.01, 0.1, 0.25, 0.5, 0.99]
    rows = confidence_sweep(train, test, ["C45", "SS", "STP"], cs, {"SS": 0.2, "STP": 0.2},
                            0.1, RngStream(1))
    assert len(rows) == len(cs) * 3
    c45 = [r[2] for r in rows if r[1] == "C45"]
    assert all(a <= b for a, b in zip(c45, c45[1:]))
    with pytest.raises(ValueError):
        confidence_sweep(train, test, ["UDT"], cs, {}, 0.0, RngStream(1))


# --- reports ------------------------------------------------------------------------------

def _fake_records():
    gen = RngStream(9).generator
    recs = []
    for ds in ("a", "b"):
        for p in range(6):
            for m in ("C45", "STP"):
                for n in (0.0, 0.2):
                    leaves = int(15 + gen.integers(-3, 4) - (4 if m == "STP" else 0))
                    recs.append(RunRecord(ds, m, n, p, leaves, float(gen.uniform(0.6, 0.9)),
                                          None if m == "C45" else 0.1, None))
    return recs


def test_results_round_trip(tmp_path):
    recs = _fake_records()
    write_results(recs, tmp_path / "r.csv")
    assert read_results(tmp_path / "r.csv") == recs


def test_summary_and_reports(tmp_path):
    recs = _fake_records()
    rows, zl, _ = summarize(recs)
    assert {(r.method, r.noise) for r in rows} == {(m, n) for m in ("C45", "STP")
                                                   for n in (0.0, 0.2)}
    base = next(r for r in rows if r.method == "C45" and r.noise == 0.0)
    assert base.leaves_z == pytest.approx(0.0, abs=1e-12) and base.leaves_p is None
    stp = next(r for r in rows if r.method == "STP" and r.noise == 0.0)
    assert stp.leaves_z < 0 and 0 < stp.leaves_p <= 1
    _, paths = write_reports(recs, tmp_path / "out", "exp1")
    assert sorted(p.split("/")[-1] for p in paths.values()) == sorted(
        ["exp1_results.csv", "exp1_summary.csv", "exp1_leaves_z.csv", "exp1_accuracy_z.csv",
         "exp1_param.csv"])
    head = open(paths["leaves_z"]).readline().strip()
    assert head == "noise,C45,STP"
    assert "[leaves]" in format_table(rows)


# --- self-checks ---------------------------------------------------------------------

def test_validation_checks_pass():
    assert all(c.passed for c in check_toy_thresholds())
    assert all(c.passed for c in check_density_oracle(cases=5))
