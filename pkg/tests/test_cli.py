import csv

import numpy as np
import pytest

from softdt.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from softdt.core_data import load_csv
from softdt.inference import EvalConfig, predict_proba_many
from softdt.model import Model

TOY = "x,class\n-2,a\n-2,a\n2,b\n2,b\n"


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "s.csv"
    assert main(["synth", "--rows", "160", "--features", "5", "--classes", "2", "--seed", "3",
                 "--out", str(path)]) == EXIT_OK
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_synth_file(tmp_path, synth_csv):
    rows = _rows(synth_csv)
    assert rows[0] == ["x1", "x2", "x3", "x4", "x5", "class"] and len(rows) == 161
    again = tmp_path / "again.csv"
    main(["synth", "--rows", "160", "--features", "5", "--classes", "2", "--seed", "3",
          "--out", str(again)])
    assert again.read_bytes() == open(synth_csv, "rb").read()
    assert main(["synth", "--rows", "10", "--features", "2", "--informative", "5",
                 "--out", str(again)]) == EXIT_USAGE


def test_synth_default_shape(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["synth", "--out", str(out)]) == EXIT_OK
    d = load_csv(str(out))
    assert d.X.shape == (500, 15) and d.n_classes == 2


def test_synth_label_noise(tmp_path, synth_csv):
    out = tmp_path / "noisy.csv"
    assert main(["synth", "--rows", "160", "--features", "5", "--classes", "2", "--seed", "3",
                 "--label-noise", "0.3", "--out", str(out)]) == EXIT_OK
    clean, noisy = load_csv(synth_csv), load_csv(str(out))
    a, b = np.argsort(clean.X[:, 0]), np.argsort(noisy.X[:, 0])
    np.testing.assert_array_equal(clean.X[a], noisy.X[b])
    assert 0 < np.sum(clean.y[a] != noisy.y[b]) < 80
    assert main(["synth", "--label-noise", "2", "--out", str(out)]) == EXIT_USAGE


def test_experiment_builtin_suite(tmp_path, capsys):
    assert main(["experiment", "--perms", "2", "--methods", "c45", "--noise", "0",
                 "--confidence", "0.25", "--no-timing", "--quiet",
                 "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "exp1_results.csv")
    assert len(rows) == 1 + 5 * 2
    assert {r[0] for r in rows[1:]} == {f"synthetic{i}" for i in range(1, 6)}


def test_train_toy_threshold(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    data.write_text(TOY)
    model = tmp_path / "m.txt"
    assert main(["train", str(data), "--out", str(model), "--min-branch-weight", "1"]) == EXIT_OK
    m = Model.load(model)
    assert m.tree.threshold == 2.0 and m.class_names == ("a", "b")
    out = capsys.readouterr().out
    assert "leaves 2" in out and "training accuracy 1.000000" in out


def test_soft_prop_zero_ut_matches_hard(tmp_path, synth_csv):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["train", synth_csv, "--out", str(a)])
    main(["train", synth_csv, "--out", str(b), "--prop", "soft", "--ut", "0"])
    assert Model.load(a).dumps().split("tree:")[1] == Model.load(b).dumps().split("tree:")[1]


def test_target_leaves_echoes_confidence(tmp_path, synth_csv, capsys):
    out = tmp_path / "m.txt"
    assert main(["train", synth_csv, "--out", str(out), "--target-leaves", "6"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "calibrated confidence" in text
    cfg = Model.load(out).config
    assert cfg["target_leaves"] == "6" and 0 < float(cfg["confidence"]) < 1


@pytest.mark.parametrize("flags", [["--us", "0.1"], ["--ut", "0.1"],
                                   ["--confidence", "0.2", "--target-leaves", "10"],
                                   ["--confidence", "1.5"], ["--search", "fuzzy"],
                                   ["--no-prune", "--confidence", "0.2"]])
def test_train_flag_conflicts(tmp_path, synth_csv, flags):
    assert main(["train", synth_csv, "--out", str(tmp_path / "m"), *flags]) == EXIT_USAGE
    assert not (tmp_path / "m").exists()


def test_missing_file_is_data_error(tmp_path):
    assert main(["train", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "m")]) == EXIT_DATA


def test_predict_round_trip(tmp_path, synth_csv, capsys):
    model = tmp_path / "m.txt"
    main(["train", synth_csv, "--out", str(model), "--search", "soft", "--us", "0.1"])
    hard, soft0, soft = (tmp_path / f"{n}.csv" for n in ("h", "s0", "s"))
    assert main(["predict", str(model), synth_csv, "--out", str(hard)]) == EXIT_OK
    assert "accuracy" in capsys.readouterr().out
    main(["predict", str(model), synth_csv, "--out", str(soft0), "--eval", "soft", "--ue", "0"])
    main(["predict", str(model), synth_csv, "--out", str(soft), "--eval", "soft", "--ue", "0.1"])
    assert hard.read_bytes() == soft0.read_bytes()
    rows = _rows(soft)
    assert rows[0] == ["row", "prediction", "p_0", "p_1"]
    probs = np.array([[float(v) for v in r[2:]] for r in rows[1:]])
    assert np.all(np.abs(probs.sum(axis=1) - 1) <= 1.5e-6)
    # matches in-memory prediction at printed precision
    m = Model.load(model)
    data = load_csv(synth_csv)
    mem = predict_proba_many(m.tree, data.X, EvalConfig("soft", 0.1, m.means))
    assert [[f"{v:.6f}" for v in r] for r in mem] == [r[2:] for r in rows[1:]]
    hard_probs = np.array([[float(v) for v in r[2:]] for r in _rows(hard)[1:]])
    assert probs.max() <= hard_probs.max()


def test_predict_to_stdout_and_mismatch(tmp_path, synth_csv, capsys):
    model = tmp_path / "m.txt"
    main(["train", synth_csv, "--out", str(model)])
    capsys.readouterr()
    assert main(["predict", str(model), synth_csv]) == EXIT_OK
    assert capsys.readouterr().out.startswith("row,prediction,p_0,p_1\n0,")
    other = tmp_path / "o.csv"
    other.write_text("a,b,class\n1,2,x\n3,4,y\n")
    assert main(["predict", str(model), str(other)]) == EXIT_DATA
    assert main(["predict", str(model), synth_csv, "--ue", "0.1"]) == EXIT_USAGE
    bad = tmp_path / "bad.txt"
    bad.write_text("hello\n")
    assert main(["predict", str(bad), synth_csv]) == EXIT_DATA


def test_model_round_trip(tmp_path, synth_csv):
    model = tmp_path / "m.txt"
    main(["train", synth_csv, "--out", str(model), "--prop", "soft", "--ut", "0.2"])
    m = Model.load(model)
    assert Model.loads(m.dumps()).dumps() == m.dumps() == model.read_text()


def _experiment(out, synth_csv, *extra):
    return main(["experiment", "--data", synth_csv, "--perms", "2", "--folds", "3",
                 "--noise", "0,0.2", "--methods", "c45,ss,stp", "--grid", "0,0.2",
                 "--confidence", "0.25", "--no-timing", "--quiet", "--out", str(out), *extra])


def test_experiment_outputs_are_reproducible(tmp_path, synth_csv, capsys):
    assert _experiment(tmp_path / "a", synth_csv) == EXIT_OK
    assert _experiment(tmp_path / "b", synth_csv) == EXIT_OK
    for name in ("exp1_results.csv", "exp1_summary.csv", "exp1_leaves_z.csv",
                 "exp1_accuracy_z.csv", "exp1_param.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert "[leaves]" in capsys.readouterr().out


def test_experiment_baseline_only(tmp_path, synth_csv):
    out = tmp_path / "c"
    assert main(["experiment", "--data", synth_csv, "--perms", "3", "--noise", "0",
                 "--methods", "c45", "--confidence", "0.25", "--quiet", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "exp1_summary.csv")))
    assert len(rows) == 1 and abs(float(rows[0]["accuracy_z"])) < 1e-12
    # equal leaf counts give a zero baseline std, reported as nan
    lz = float(rows[0]["leaves_z"])
    assert np.isnan(lz) or abs(lz) < 1e-12


def test_experiment_without_baseline_skips_summary(tmp_path, synth_csv, capsys):
    out = tmp_path / "d"
    assert main(["experiment", "--data", synth_csv, "--perms", "2", "--folds", "3",
                 "--noise", "0.1", "--methods", "c45", "--confidence", "0.25", "--quiet",
                 "--out", str(out)]) == 0
    assert "summary skipped" in capsys.readouterr().out
    assert (out / "exp1_results.csv").exists() and not (out / "exp1_summary.csv").exists()


@pytest.mark.parametrize("flags", [["--exp", "3"], ["--perms", "1"], ["--methods", "rf"],
                                   ["--noise", "a,b"], ["--jobs", "0"]])
def test_experiment_invalid_plan(tmp_path, flags):
    assert main(["experiment", "--out", str(tmp_path / "x"), "--quiet", *flags]) == EXIT_USAGE


def test_config_file_and_precedence(tmp_path, synth_csv):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment settings\nperms = 3\nmethods = c45\nnoise = 0\n"
                   "confidence = 0.25\nno-timing = true\nquiet = yes\n")
    out = tmp_path / "cfg"
    assert main(["experiment", "--data", synth_csv, "--config", str(cfg), "--perms", "2",
                 "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(open(out / "exp1_results.csv")))
    assert len(rows) == 2 and {r["method"] for r in rows} == {"C45"}
    assert all(r["seconds"] == "" for r in rows)
    bad = tmp_path / "bad.cfg"
    bad.write_text("exp = 7\n")
    assert main(["experiment", "--config", str(bad), "--out", str(out)]) == EXIT_USAGE
    assert main(["experiment", "--config", str(tmp_path / "none.cfg")]) == EXIT_USAGE


def test_validate_prints_both_forms(capsys):
    code = main(["validate", "--sigma", "2", "--draws", "20000", "--tolerance", "0.02"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "0.841345" in out and "0.921350" in out


def test_validate_failure_exit_code(capsys):
    assert main(["validate", "--sigma", "1", "--draws", "1000", "--tolerance", "0"]) \
        == EXIT_VALIDATION
    assert "FAIL" in capsys.readouterr().out


def test_usage_errors(capsys):
    assert main(["bogus"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["train", "--help"]) == EXIT_OK
    assert "--target-leaves" in capsys.readouterr().out
