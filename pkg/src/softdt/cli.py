"""Command-line front end: train, predict, experiment, synth, validate."""

from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings

import numpy as np

from .core_data import DataError, RngStream, load_csv, load_features, write_csv
from .inference import EvalConfig, accuracy, predict_proba_many
from .model import Model
from .pruning import PruneConfig, calibrate_confidence_for_target_leaves, ebp_prune
from .split_search import SoftSearchConfig
from .tree_induction import GrowConfig, TreeGrower, tree_leaf_count

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text):
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def read_config(path):
    """Reads ``key=value`` lines; ``#`` starts a comment, keys use - or _."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, eq, value = line.partition("=")
                if not eq or not key.strip():
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                out[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return out


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _apply_config(parser, config):
    """Turns config values into parser defaults so explicit flags still win."""
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in config.items():
        act = actions.get(key)
        if act is None or key in ("help", "config", "command"):
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            v = value.lower()
            if v not in _TRUE | _FALSE:
                raise UsageError(f"config key {key!r} expects a boolean")
            defaults[key] = v in _TRUE
        else:
            try:
                typed = act.type(value) if act.type else value
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
            if act.choices is not None and typed not in act.choices:
                raise UsageError(f"config key {key!r}: {value!r} not in {list(act.choices)}")
            defaults[key] = typed
    parser.set_defaults(**defaults)


def build_parser():
    p = _Parser(prog="softdt", description="Decision trees with soft search, soft training "
                "propagation and soft evaluation for noisy numeric data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="key=value file; explicit flags take precedence")
        sp.add_argument("--seed", type=int, default=0, help="root random seed")

    t = sub.add_parser("train", help="grow and prune a tree from a CSV file")
    common(t)
    t.add_argument("data", help="training CSV (header row, label column)")
    t.add_argument("--label", default="class", help="label column name")
    t.add_argument("--out", "-o", required=False, help="model file to write")
    t.add_argument("--search", choices=("hard", "soft"), default="hard")
    t.add_argument("--prop", choices=("hard", "soft"), default="hard")
    t.add_argument("--us", type=float, default=0.0, help="soft-search uncertainty factor")
    t.add_argument("--ut", type=float, default=0.0, help="soft-propagation uncertainty factor")
    t.add_argument("--window", type=float, default=6.0, help="soft-search window factor")
    t.add_argument("--resolution", type=float, default=0.1, help="soft-search grid resolution")
    t.add_argument("--confidence", type=float, default=None,
                   help="pruning confidence factor (default 0.25)")
    t.add_argument("--target-leaves", type=int, default=None,
                   help="calibrate the confidence factor to this mean leaf count")
    t.add_argument("--no-prune", action="store_true", help="keep the unpruned tree")
    t.add_argument("--min-branch-weight", type=float, default=2.0)
    t.add_argument("--max-depth", type=int, default=None)

    q = sub.add_parser("predict", help="classify the rows of a CSV file")
    common(q)
    q.add_argument("model", help="model file from 'train'")
    q.add_argument("data", help="CSV with the model's attribute columns")
    q.add_argument("--label", default="class", help="label column to ignore (and score)")
    q.add_argument("--out", "-o", help="predictions CSV (default: stdout)")
    q.add_argument("--eval", choices=("hard", "soft"), default="hard")
    q.add_argument("--ue", type=float, default=0.0, help="soft-evaluation uncertainty factor")

    e = sub.add_parser("experiment", help="run a noise-robustness experiment")
    common(e)
    e.add_argument("--exp", type=int, choices=(1, 2), default=1,
                   help="1: noisy training data, 2: noisy test data")
    e.add_argument("--noise", type=_float_list, default="0,0.05,0.1,0.2,0.3,0.4,0.5")
    e.add_argument("--perms", type=int, default=30, help="train/test permutations")
    e.add_argument("--methods", type=_str_list, default="c45,ss,stp,se,udt")
    e.add_argument("--grid", type=_float_list, default="0,0.025,0.05,0.1,0.15,0.2,0.3,0.4,0.5",
                   help="tuning grid for the uncertainty factors")
    e.add_argument("--udt-grid", type=_float_list, default="0,0.01,0.02,0.05,0.1,0.2")
    e.add_argument("--udt-samples", type=int, default=100)
    e.add_argument("--folds", type=int, default=10)
    e.add_argument("--train-fraction", type=float, default=0.7)
    e.add_argument("--data", type=_str_list, default=None,
                   help="comma-separated CSV files (default: the synthetic suite)")
    e.add_argument("--label", default="class")
    e.add_argument("--target-leaves", type=int, default=15,
                   help="leaf target for per-dataset confidence calibration")
    e.add_argument("--confidence", type=float, default=None,
                   help="fixed confidence factor instead of calibration")
    e.add_argument("--out", "-o", default="results", help="output directory")
    e.add_argument("--jobs", type=int, default=1, help="worker processes")
    e.add_argument("--no-timing", action="store_true",
                   help="leave the seconds column empty (byte-identical reruns)")
    e.add_argument("--quiet", action="store_true")

    s = sub.add_parser("synth", help="write a synthetic classification dataset")
    common(s)
    s.add_argument("--rows", type=int, default=500)
    s.add_argument("--features", type=int, default=15)
    s.add_argument("--informative", type=int, default=None,
                   help="informative features (default ceil(2/3 * features))")
    s.add_argument("--classes", type=int, default=2)
    s.add_argument("--class-sep", type=float, default=1.0)
    s.add_argument("--label-noise", type=float, default=0.0,
                   help="fraction of rows whose label is redrawn uniformly")
    s.add_argument("--out", "-o", required=False, help="CSV file to write")

    v = sub.add_parser("validate", help="run the analytic and oracle self-checks")
    common(v)
    v.add_argument("--sigma", type=_float_list, default="0.25,0.5,1,2,4")
    v.add_argument("--draws", type=int, default=1_000_000)
    v.add_argument("--tolerance", type=float, default=0.005,
                   help="allowed |analytic - simulated| misclassification gap")
    return p


# ---------------------------------------------------------------- train

def _train_configs(a):
    if a.us < 0 or a.ut < 0:
        raise UsageError("--us and --ut must be nonnegative")
    if a.us > 0 and a.search != "soft":
        raise UsageError("--us requires --search soft")
    if a.ut > 0 and a.prop != "soft":
        raise UsageError("--ut requires --prop soft")
    if a.search == "soft" and a.us == 0:
        warnings.warn("--search soft with --us 0 is plain hard search")
    if a.confidence is not None and a.target_leaves is not None:
        raise UsageError("--confidence and --target-leaves are mutually exclusive")
    if a.confidence is not None and not 0 < a.confidence < 1:
        raise UsageError("--confidence must lie in (0, 1)")
    if a.target_leaves is not None and a.target_leaves < 2:
        raise UsageError("--target-leaves must be at least 2")
    if a.no_prune and (a.confidence is not None or a.target_leaves is not None):
        raise UsageError("--no-prune conflicts with pruning options")
    try:
        soft = SoftSearchConfig(a.us, a.window, a.resolution)
        grow = GrowConfig(a.prop, a.ut, a.min_branch_weight, a.max_depth, a.search, soft)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return grow


def cmd_train(a):
    if not a.out:
        raise UsageError("train needs --out")
    grow = _train_configs(a)
    data = load_csv(a.data, a.label)
    config = {"search": a.search, "prop": a.prop, "us": repr(a.us), "ut": repr(a.ut),
              "window": repr(a.window), "resolution": repr(a.resolution),
              "min_branch_weight": repr(a.min_branch_weight), "max_depth": str(a.max_depth),
              "seed": str(a.seed)}
    tree = TreeGrower(data, grow).grow()
    unpruned = tree_leaf_count(tree)
    if a.no_prune:
        config["prune"] = "off"
    else:
        c = 0.25 if a.confidence is None else a.confidence
        if a.target_leaves is not None:
            cal = calibrate_confidence_for_target_leaves(
                data, a.target_leaves, grow, RngStream(a.seed).derive("calibrate"))
            c = cal.confidence
            config["target_leaves"] = str(cal.target)
            print(f"calibrated confidence {c:.6g} (target {cal.target} leaves, "
                  f"cv mean {cal.mean_leaves:.2f})")
        config["confidence"] = repr(float(c))
        tree = ebp_prune(tree, data, PruneConfig(c), grow)
    means = np.where(np.isfinite(data.means), data.means, 0.0)
    model = Model(tree, tuple(data.attribute_names), tuple(data.class_names), means, config)
    model.save(a.out)
    print(f"leaves {tree_leaf_count(tree)} (unpruned {unpruned})")
    print(f"training accuracy {accuracy(tree, data):.6f}")
    print(f"model written to {a.out}")
    return EXIT_OK


# -------------------------------------------------------------- predict

def cmd_predict(a):
    if a.ue < 0:
        raise UsageError("--ue must be nonnegative")
    if a.ue > 0 and a.eval != "soft":
        raise UsageError("--ue requires --eval soft")
    try:
        model = Model.load(a.model)
    except OSError as exc:
        raise DataError(f"cannot read model {a.model}: {exc}") from None
    except ValueError as exc:
        raise DataError(f"{a.model}: {exc}") from None
    names, X = load_features(a.data, a.label)
    if tuple(names) != model.attribute_names:
        raise DataError(f"attribute mismatch: model has {list(model.attribute_names)}, "
                        f"data has {names}")
    cfg = EvalConfig(a.eval, a.ue, model.means)
    proba = predict_proba_many(model.tree, X, cfg)
    pred = np.argmax(proba, axis=1)
    fh = open(a.out, "w", newline="") if a.out else sys.stdout
    try:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["row", "prediction", *(f"p_{c}" for c in model.class_names)])
        for i, (k, row) in enumerate(zip(pred, proba)):
            out.writerow([i, model.class_names[k], *(f"{v:.6f}" for v in row)])
    finally:
        if a.out:
            fh.close()
    if a.out:
        _report_test_accuracy(a, model, pred)
    return EXIT_OK


def _report_test_accuracy(a, model, pred):
    try:
        data = load_csv(a.data, a.label)
    except DataError:
        return
    lookup = {c: k for k, c in enumerate(model.class_names)}
    truth = np.array([lookup.get(data.class_names[k], -1) for k in data.y])
    print(f"accuracy {np.mean(truth == pred):.6f} on {len(pred)} rows")


# ----------------------------------------------------------- experiment

def cmd_experiment(a):
    from .experiments.protocol import BenchmarkDataset, ExperimentPlan, calibrate_benchmark
    from .experiments.protocol import run_experiment, synthetic_benchmarks
    from .experiments.reports import format_table, write_reports

    if a.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if a.confidence is not None and not 0 < a.confidence < 1:
        raise UsageError("--confidence must lie in (0, 1)")
    try:
        plan = ExperimentPlan(a.exp, a.noise, a.perms, a.train_fraction, a.methods, a.grid,
                              a.udt_grid, a.udt_samples, a.folds, a.seed, not a.no_timing)
    except ValueError as exc:
        raise UsageError(f"invalid plan: {exc}") from None
    if a.data:
        raw = {os.path.splitext(os.path.basename(p))[0]: load_csv(p, a.label) for p in a.data}
        calibrated = []
        for name, data in raw.items():
            if a.confidence is not None:
                calibrated.append((BenchmarkDataset(name, data, a.confidence), None))
            else:
                calibrated.append(calibrate_benchmark(name, data, a.target_leaves, a.seed,
                                                      folds=plan.folds))
    else:
        calibrated = synthetic_benchmarks(a.seed, plan.permutations, a.target_leaves,
                                          plan.folds, a.confidence)
    datasets = [ds for ds, _ in calibrated]
    if not a.quiet:
        for ds, cal in calibrated:
            if cal is not None:
                print(f"{ds.name}: confidence {cal.confidence:.4g} "
                      f"(target {cal.target}, cv leaves {cal.mean_leaves:.1f})")
    done = [0]
    total = len(datasets) * plan.permutations

    def progress(_):
        done[0] += 1
        if not a.quiet:
            print(f"  job {done[0]}/{total}", file=sys.stderr)

    records = run_experiment(plan, datasets, a.jobs, progress)
    if "C45" not in plan.methods or 0.0 not in plan.noise_factors:
        from .experiments.reports import write_results

        os.makedirs(a.out, exist_ok=True)
        path = os.path.join(a.out, f"exp{plan.experiment}_results.csv")
        write_results(records, path)
        print(f"results written to {path}; no C4.5 zero-noise baseline, summary skipped")
        return EXIT_OK
    rows, paths = write_reports(records, a.out, f"exp{plan.experiment}")
    print(format_table(rows, f"Experiment {plan.experiment}: mean standardized values "
                             "(* p < 0.05 vs C4.5)"))
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


# ---------------------------------------------------------------- synth

def cmd_synth(a):
    from .experiments.synth import synth_guyon

    if not a.out:
        raise UsageError("synth needs --out")
    try:
        data = synth_guyon(a.rows, a.features, a.informative, a.classes, a.class_sep,
                           RngStream(a.seed).derive("synth"), flip_y=a.label_noise)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_csv(data, a.out)
    print(f"wrote {data.n_rows} rows x {data.n_attributes} attributes, "
          f"{data.n_classes} classes to {a.out}")
    return EXIT_OK


# ------------------------------------------------------------- validate

def cmd_validate(a):
    from .experiments.validation import d_term_forms, run_validation

    if a.draws < 1 or a.tolerance < 0 or not a.sigma or any(s <= 0 for s in a.sigma):
        raise UsageError("need positive --sigma values, --draws >= 1 and --tolerance >= 0")
    for s in a.sigma:
        with_root2, plain = d_term_forms(s)
        print(f"sigma={s:g}: P(d<0) = Phi(4/(sqrt(2) sigma)) = {with_root2:.6f}; "
              f"Phi(4/(2 sigma)) = {plain:.6f}")
    checks = run_validation(a.sigma, a.draws, a.tolerance, a.seed)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "experiment": cmd_experiment,
            "synth": cmd_synth, "validate": cmd_validate}


class _ParseExit(Exception):
    def __init__(self, code):
        super().__init__(code)
        self.code = code


def _parse(parser, argv):
    # argparse exits on errors and --help; turn that into a return code
    try:
        return parser.parse_args(argv)
    except SystemExit as exc:
        raise _ParseExit(exc.code if isinstance(exc.code, int) else EXIT_USAGE) from None


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(parser, argv)
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]
            _apply_config(sub, read_config(args.config))
            args = _parse(parser, argv)
        return COMMANDS[args.command](args)
    except _ParseExit as exc:
        return exc.code
    except UsageError as exc:
        print(f"softdt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"softdt: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
