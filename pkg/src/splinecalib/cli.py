"""Command-line interface: ``fit``, ``apply``, ``eval`` and ``cv-calibrate``.

Machine-readable outputs (calibrator JSON, CSV, ``--json`` reports) keep full
float precision; human-readable tables round to 4 decimals.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .calibrators import (
    CLIPPING_GRID,
    ClippingCalibrator,
    MulticlassCalibrator,
    SplineConfig,
    best_clipping,
    clip_probabilities,
    fit_isotonic,
    fit_multiclass,
    fit_platt,
    fit_spline_binary,
)
from .cv_pipeline import CvConfig, builtin_trainer, cross_validated_calibrate
from .data import (
    MulticlassLabels,
    ProbabilityMatrix,
    csv_kind,
    load_feature_table,
    load_labeled_scores,
    load_probability_matrix,
    load_scores,
    read_header,
    write_probability_matrix,
    write_scores,
)
from .errors import CalibrationError, DimensionMismatchError, InvalidOptionsError, MissingColumnError
from .ridge_glm import default_lambda_grid
from .serialization import load_calibrator, save_calibrator

DEFAULT_SEED = 0
BINARY_ONLY_METHODS = ("platt", "isotonic")


def _add_spline_options(p):
    g = p.add_argument_group("spline options")
    g.add_argument("--max-knots", type=int, default=200)
    g.add_argument("--lambda-min", type=float, default=1e-4)
    g.add_argument("--lambda-max", type=float, default=1e4)
    g.add_argument("--lambda-count", type=int, default=25)
    g.add_argument("--folds", type=int, default=5, help="CV folds for the lambda search")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--compact-logit", choices=("auto", "on", "off"), default="auto")
    g.add_argument("--epsilon", type=float, default=None, help="fixed compact-logit epsilon")
    g.add_argument("--knot-strategy", choices=("quantile", "random"), default="quantile")


def _spline_config(args, folds=None):
    return SplineConfig(
        max_knots=args.max_knots,
        lambda_grid=tuple(default_lambda_grid(args.lambda_min, args.lambda_max, args.lambda_count)),
        folds=folds or args.folds,
        seed=args.seed,
        use_compact_logit=args.compact_logit,
        epsilon=args.epsilon,
        knot_strategy=args.knot_strategy,
    )


def _print_lambda_report(rep, out, title=None):
    if title:
        print(title, file=out)
    print(f"{'lambda':>12}  {'cv_log_loss':>11}", file=out)
    for lam, loss, chosen in rep.table():
        print(f"{lam:12.4g}  {loss:11.4f}{'  *' if chosen else ''}", file=out)


def _file_kind(path):
    kind = csv_kind(path)
    if kind == "unknown":
        raise MissingColumnError("score or prob_<class>", path)
    return kind


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def cmd_fit(args, out=None):
    out = out or sys.stdout
    kind = _file_kind(args.input)
    if kind == "multiclass":
        if args.method in BINARY_ONLY_METHODS:
            raise DimensionMismatchError(
                f"{args.method} calibrates binary scores; {args.input} has "
                f"{len([h for h in read_header(args.input) if h.startswith('prob_')])} probability columns. "
                "Use --method spline (per-column) or clipping for multiclass files."
            )
        probs, labels = load_probability_matrix(args.input, args.label_column)
        if args.method == "clipping":
            cal = _fit_clipping(args, probs, labels, out)
        else:
            if labels is None:
                raise MissingColumnError(args.label_column, args.input)
            cal = fit_multiclass(probs, labels, _spline_config(args))
            for name, c in zip(cal.class_names, cal.per_class):
                eps = "off" if c.transform is None else f"eps={c.transform.epsilon:g}"
                print(f"class {name}: lambda*={c.lambda_report.chosen:.4g} compact-logit {eps}", file=out)
    else:
        if args.method == "clipping" and args.p_min is not None:
            cal = ClippingCalibrator(args.p_min)
        elif args.method == "clipping":
            data = load_labeled_scores(args.input, args.score_column, args.label_column)
            probs = ProbabilityMatrix(np.column_stack([1 - data.scores, data.scores]))
            cal = _fit_clipping(args, probs, data.labels, out)
        else:
            data = load_labeled_scores(args.input, args.score_column, args.label_column)
            if args.method == "spline":
                cal = fit_spline_binary(data, _spline_config(args))
                eps = "off" if cal.transform is None else f"epsilon={cal.transform.epsilon:g}"
                _print_lambda_report(cal.lambda_report, out, f"compact logit: {eps}")
            elif args.method == "platt":
                cal = fit_platt(data)
                print(f"slope={cal.slope:.4f} intercept={cal.intercept:.4f}", file=out)
            else:
                cal = fit_isotonic(data)
                print(f"{cal.block_values.size} isotonic blocks", file=out)
    save_calibrator(cal, args.output)
    print(f"wrote {args.output}", file=out)
    return cal


def _fit_clipping(args, probs, labels, out):
    if args.p_min is not None:
        return ClippingCalibrator(args.p_min)
    if labels is None:
        raise InvalidOptionsError("--p-min is required unless the input has labels to choose it")
    cal, loss = best_clipping(probs, labels, CLIPPING_GRID)
    print(f"best p_min over {CLIPPING_GRID}: {cal.p_min:g} (log-loss {loss:.4f})", file=out)
    return cal


# ---------------------------------------------------------------------------
# apply
# ---------------------------------------------------------------------------

def cmd_apply(args, out=None):
    out = out or sys.stdout
    cal = load_calibrator(args.calibrator)
    kind = _file_kind(args.input)
    if kind == "multiclass":
        probs, labels = load_probability_matrix(args.input, args.label_column)
        if isinstance(cal, MulticlassCalibrator):
            result = cal.predict(probs)
        elif isinstance(cal, ClippingCalibrator):
            result = clip_probabilities(probs, cal)
        else:
            raise DimensionMismatchError(
                f"{cal.kind} calibrator is binary but {args.input} has {probs.n_classes} probability columns"
            )
        write_probability_matrix(args.output, result, labels, args.label_column)
    else:
        if isinstance(cal, MulticlassCalibrator):
            raise DimensionMismatchError(
                f"{cal.n_classes}-class calibrator cannot apply to binary score file {args.input}"
            )
        scores = load_scores(args.input, args.score_column)
        labels = None
        if args.label_column in read_header(args.input):
            labels = load_labeled_scores(args.input, args.score_column, args.label_column).labels
        write_scores(args.output, cal.predict(scores), labels, args.score_column, args.label_column)
    print(f"wrote {args.output}", file=out)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def evaluate_file(path, score_column="score", label_column="label"):
    """Metrics for one labelled file.

    Returns ``(report, pooled)`` where ``pooled`` is the LabeledScores used for
    reliability bins (all one-vs-rest cells for multiclass files).
    """
    if _file_kind(path) == "multiclass":
        probs, labels = load_probability_matrix(path, label_column)
        if labels is None:
            raise MissingColumnError(label_column, path)
        matrix, y = probs.values, labels.labels
        pooled = metrics.pooled_one_vs_rest(matrix, y)
    else:
        data = load_labeled_scores(path, score_column, label_column)
        matrix, y = np.column_stack([1 - data.scores, data.scores]), data.labels
        pooled = data
    report = {
        "log_loss": metrics.log_loss(matrix, y),
        "brier": metrics.brier_score(matrix, y),
        "accuracy": metrics.accuracy(matrix, y),
        "n": int(y.shape[0]),
    }
    return report, pooled


def cmd_eval(args, out=None):
    out = out or sys.stdout
    names = args.names or [Path(p).stem for p in args.input]
    if len(names) != len(args.input):
        raise InvalidOptionsError("--names must give one name per --input")
    reports = []
    for name, path in zip(names, args.input):
        rep, pooled = evaluate_file(path, args.score_column, args.label_column)
        rep["name"] = name
        rep["path"] = str(path)
        reports.append(rep)
        if args.reliability:
            target = Path(args.reliability)
            if len(args.input) > 1:
                target = target.with_name(f"{target.stem}_{name}{target.suffix}")
            metrics.reliability_bins(pooled, args.bins).to_csv(target)
    width = max(12, *(len(r["name"]) for r in reports))
    print(f"{'metric':<10}" + "".join(f"{r['name']:>{width + 2}}" for r in reports), file=out)
    for key in ("log_loss", "brier", "accuracy"):
        print(f"{key:<10}" + "".join(f"{r[key]:>{width + 2}.4f}" for r in reports), file=out)
    if args.json:
        Path(args.json).write_text(json.dumps({"reports": reports}, indent=1), encoding="utf-8")
    return reports


# ---------------------------------------------------------------------------
# cv-calibrate
# ---------------------------------------------------------------------------

def _trainer_options(args):
    opts = {}
    if args.sharpen is not None:
        opts["sharpen"] = args.sharpen
    if args.alpha is not None:
        opts["alpha"] = args.alpha
    if args.l2 is not None:
        opts["l2"] = args.l2
    if args.nb_encoding is not None:
        opts["encoding"] = args.nb_encoding
    return opts


def _sorted_classes(values):
    """Numeric order when every label parses as a number, else string order."""
    try:
        return sorted(values, key=float)
    except ValueError:
        return sorted(values)


def cmd_cv_calibrate(args, out=None):
    out = out or sys.stdout
    if (args.oof is None) == (args.features is None):
        raise InvalidOptionsError("give exactly one of --oof or --features")
    config = _spline_config(args, folds=args.calib_folds)
    if args.oof is not None:
        if _file_kind(args.oof) == "binary":
            cal = fit_spline_binary(load_labeled_scores(args.oof, args.score_column, args.labels_col), config)
        else:
            probs, labels = load_probability_matrix(args.oof, args.labels_col)
            if labels is None:
                raise MissingColumnError(args.labels_col, args.oof)
            cal = fit_multiclass(probs, labels, config, args.method)
        save_calibrator(cal, args.output)
        print(f"wrote {args.output}", file=out)
        return cal

    if args.trainer is None:
        raise InvalidOptionsError("--features needs --trainer")
    columns = args.feature_columns.split(",") if args.feature_columns else None
    cols, features, label_text = load_feature_table(args.features, args.labels_col, columns)
    class_names = _sorted_classes(set(label_text))
    y = np.array([class_names.index(v) for v in label_text], dtype=np.int64)
    trainer = builtin_trainer(args.trainer, **_trainer_options(args))
    result = cross_validated_calibrate(
        features, MulticlassLabels(y, len(class_names)), trainer,
        CvConfig(folds=args.folds, seed=args.seed), config, args.method,
    )
    cal = MulticlassCalibrator(result.calibrator.per_class, tuple(class_names))
    save_calibrator(cal, args.output)
    print(f"wrote {args.output}", file=out)
    if args.model_output:
        body = {"feature_columns": cols, "class_names": class_names, "model": result.model.to_dict()}
        Path(args.model_output).write_text(json.dumps(body), encoding="utf-8")
        print(f"wrote {args.model_output}", file=out)
    if args.test:
        test_label = args.labels_col if args.labels_col in read_header(args.test) else None
        _, test_features, test_text = load_feature_table(args.test, test_label, cols)
        test_y = None
        if test_text is not None:
            unknown = set(test_text) - set(class_names)
            if unknown:
                raise InvalidOptionsError(f"test labels {sorted(unknown)} were not seen in training")
            test_y = np.array([class_names.index(v) for v in test_text], dtype=np.int64)
        raw = ProbabilityMatrix.normalized(result.model.predict_proba(test_features), class_names)
        if args.uncalibrated_output:
            write_probability_matrix(args.uncalibrated_output, raw, test_y, args.labels_col)
            print(f"wrote {args.uncalibrated_output}", file=out)
        if args.predictions_output:
            write_probability_matrix(args.predictions_output, cal.predict(raw), test_y, args.labels_col)
            print(f"wrote {args.predictions_output}", file=out)
    return result


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="splinecalib", description="Spline-based probability calibration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a calibrator to labelled scores")
    p.add_argument("--method", choices=("spline", "platt", "isotonic", "clipping"), default="spline")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--score-column", default="score")
    p.add_argument("--label-column", default="label")
    p.add_argument("--p-min", type=float, default=None)
    _add_spline_options(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("apply", help="apply a saved calibrator to a score file")
    p.add_argument("--calibrator", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--score-column", default="score")
    p.add_argument("--label-column", default="label")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("eval", help="log-loss, Brier score, accuracy and reliability bins")
    p.add_argument("--input", required=True, action="append", help="repeat to compare files side by side")
    p.add_argument("--names", nargs="+", default=None)
    p.add_argument("--score-column", default="score")
    p.add_argument("--label-column", default="label")
    p.add_argument("--bins", type=int, default=metrics.DEFAULT_BINS)
    p.add_argument("--reliability", default=None, help="CSV path for reliability bins")
    p.add_argument("--json", default=None, help="JSON path for the full-precision report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cv-calibrate", help="cross-validated calibration")
    p.add_argument("--oof", default=None, help="stacked out-of-fold predictions with labels")
    p.add_argument("--features", default=None, help="feature CSV for a built-in trainer")
    p.add_argument("--labels-col", default="label")
    p.add_argument("--score-column", default="score")
    p.add_argument("--feature-columns", default=None, help="comma-separated subset of feature columns")
    p.add_argument("--trainer", default=None,
                   choices=("multinomial_logistic", "gaussian_nb", "categorical_nb",
                            "gaussian_naive_bayes", "categorical_naive_bayes", "logistic"))
    p.add_argument("--method", choices=("spline", "platt", "isotonic"), default="spline")
    p.add_argument("--sharpen", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--nb-encoding", choices=("categorical", "indicator"), default=None,
                   help="categorical_nb feature model (default categorical)")
    p.add_argument("--calib-folds", type=int, default=None, help="lambda-search folds (default: --folds)")
    p.add_argument("--output", required=True)
    p.add_argument("--model-output", default=None)
    p.add_argument("--test", default=None, help="feature CSV to predict with the final model")
    p.add_argument("--predictions-output", default=None)
    p.add_argument("--uncalibrated-output", default=None)
    _add_spline_options(p)
    p.set_defaults(func=cmd_cv_calibrate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CalibrationError, FileNotFoundError, ValueError) as exc:
        print(f"splinecalib {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
