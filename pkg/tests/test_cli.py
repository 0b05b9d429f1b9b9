import json
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import expit, softmax

from conftest import calibrated_binary, write_binary_csv
from splinecalib import metrics
from splinecalib.cli import main
from splinecalib.data import load_labeled_scores, load_probability_matrix, write_probability_matrix
from splinecalib.serialization import load_calibrator

FAST = ["--lambda-count", "6", "--lambda-min", "0.01", "--lambda-max", "1000"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def binary_csv(tmp_path):
    s, y = calibrated_binary(1200, seed=5)
    return write_binary_csv(tmp_path / "cal.csv", expit(2 * np.log(s / (1 - s))), y)


@pytest.fixture
def multiclass_csv(tmp_path):
    r = np.random.default_rng(6)
    z = r.normal(size=(900, 3))
    y = np.array([r.choice(3, p=row) for row in softmax(z, axis=1)])
    path = tmp_path / "multi.csv"
    write_probability_matrix(path, softmax(3 * z, axis=1), y)
    return path


class TestFit:
    def test_spline_prints_lambda_report(self, tmp_path, binary_csv, capsys):
        assert run("fit", "--method", "spline", "--input", binary_csv, "--output", tmp_path / "c.json", *FAST) == 0
        out = capsys.readouterr().out
        assert "lambda" in out and "*" in out
        assert load_calibrator(tmp_path / "c.json").kind == "spline"

    def test_clipping_with_p_min(self, tmp_path, binary_csv):
        assert run("fit", "--method", "clipping", "--p-min", 0.01, "--input", binary_csv, "--output", tmp_path / "c.json") == 0
        cal = load_calibrator(tmp_path / "c.json")
        assert cal.kind == "clipping" and cal.p_min == 0.01

    def test_clipping_picks_from_grid(self, tmp_path, multiclass_csv, capsys):
        assert run("fit", "--method", "clipping", "--input", multiclass_csv, "--output", tmp_path / "c.json") == 0
        assert load_calibrator(tmp_path / "c.json").p_min in (0.01, 0.001, 0.0001, 0.00001)

    def test_binary_method_on_multiclass_file(self, tmp_path, multiclass_csv, capsys):
        assert run("fit", "--method", "platt", "--input", multiclass_csv, "--output", tmp_path / "c.json") == 1
        err = capsys.readouterr().err
        assert "3 probability columns" in err

    def test_multiclass_spline(self, tmp_path, multiclass_csv):
        assert run("fit", "--input", multiclass_csv, "--output", tmp_path / "c.json", *FAST) == 0
        assert load_calibrator(tmp_path / "c.json").n_classes == 3

    def test_errors_name_file_and_row(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("score,label\n0.5,1\n1.7,0\n")
        assert run("fit", "--input", bad, "--output", tmp_path / "c.json") == 1
        err = capsys.readouterr().err
        assert "bad.csv" in err and "row 2" in err

    def test_too_many_folds(self, tmp_path, capsys):
        small = write_binary_csv(tmp_path / "s.csv", [0.1, 0.4, 0.6, 0.9], [0, 1, 0, 1])
        assert run("fit", "--input", small, "--output", tmp_path / "c.json", "--folds", 10) == 1
        assert "--folds" in capsys.readouterr().err

    def test_seed_reproducible(self, tmp_path, binary_csv):
        for name in ("a", "b"):
            run("fit", "--input", binary_csv, "--output", tmp_path / f"{name}.json", "--seed", 3,
                "--knot-strategy", "random", "--max-knots", 20, *FAST)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestApplyEval:
    def test_apply_then_eval_matches_library(self, tmp_path, binary_csv):
        run("fit", "--input", binary_csv, "--output", tmp_path / "c.json", *FAST)
        assert run("apply", "--calibrator", tmp_path / "c.json", "--input", binary_csv, "--output", tmp_path / "o.csv") == 0
        run("eval", "--input", tmp_path / "o.csv", "--json", tmp_path / "r.json")
        rep = json.loads((tmp_path / "r.json").read_text())["reports"][0]
        cal = load_calibrator(tmp_path / "c.json")
        data = load_labeled_scores(binary_csv)
        p = cal.predict(data.scores)
        matrix = np.column_stack([1 - p, p])
        assert rep["log_loss"] == metrics.log_loss(matrix, data.labels)
        assert rep["brier"] == metrics.brier_score(matrix, data.labels)
        assert rep["accuracy"] == metrics.accuracy(matrix, data.labels)

    def test_multiclass_apply_then_eval(self, tmp_path, multiclass_csv):
        run("fit", "--input", multiclass_csv, "--output", tmp_path / "c.json", *FAST)
        run("apply", "--calibrator", tmp_path / "c.json", "--input", multiclass_csv, "--output", tmp_path / "o.csv")
        run("eval", "--input", tmp_path / "o.csv", "--json", tmp_path / "r.json")
        rep = json.loads((tmp_path / "r.json").read_text())["reports"][0]
        probs, labels = load_probability_matrix(multiclass_csv)
        out = load_calibrator(tmp_path / "c.json").predict(probs)
        assert rep["log_loss"] == metrics.log_loss(out, labels)
        back, _ = load_probability_matrix(tmp_path / "o.csv")
        np.testing.assert_array_equal(back.values, out.values)

    def test_identity_like_calibrator(self, tmp_path):
        s, y = calibrated_binary(4000, seed=8)
        path = write_binary_csv(tmp_path / "c.csv", s, y)
        run("fit", "--input", path, "--output", tmp_path / "c.json", "--compact-logit", "off")
        grid = np.linspace(0.05, 0.95, 50)
        write_binary_csv(tmp_path / "g.csv", grid, np.zeros(50, int))
        run("apply", "--calibrator", tmp_path / "c.json", "--input", tmp_path / "g.csv", "--output", tmp_path / "o.csv")
        out = load_labeled_scores(tmp_path / "o.csv").scores
        assert np.mean(np.abs(out - grid)) < 0.03

    def test_class_count_mismatch(self, tmp_path, capsys):
        r = np.random.default_rng(0)
        write_probability_matrix(tmp_path / "ten.csv", softmax(r.normal(size=(300, 10)), axis=1), np.arange(300) % 10)
        run("fit", "--method", "isotonic", "--input", tmp_path / "ten.csv", "--output", tmp_path / "x.json")
        capsys.readouterr()
        body = {"format": "splinecalib.calibrator", "schema_version": 1, "kind": "multiclass",
                "class_names": [str(i) for i in range(10)],
                "per_class": [{"kind": "isotonic", "boundaries": [], "block_values": [0.1]}] * 10}
        (tmp_path / "ten.json").write_text(json.dumps(body))
        write_probability_matrix(tmp_path / "three.csv", np.full((4, 3), 1 / 3))
        assert run("apply", "--calibrator", tmp_path / "ten.json", "--input", tmp_path / "three.csv",
                   "--output", tmp_path / "o.csv") == 1
        assert "10 columns" in capsys.readouterr().err

    def test_uniform_predictions(self, tmp_path, capsys):
        path = write_binary_csv(tmp_path / "u.csv", np.full(10, 0.5), [0, 1] * 5)
        run("eval", "--input", path)
        assert "0.6931" in capsys.readouterr().out

    def test_side_by_side_and_reliability(self, tmp_path, binary_csv, capsys):
        run("fit", "--input", binary_csv, "--output", tmp_path / "c.json", *FAST)
        run("apply", "--calibrator", tmp_path / "c.json", "--input", binary_csv, "--output", tmp_path / "o.csv")
        capsys.readouterr()
        assert run("eval", "--input", binary_csv, "--input", tmp_path / "o.csv", "--names", "uncalibrated", "calibrated",
                   "--reliability", tmp_path / "rel.csv", "--bins", 10) == 0
        lines = capsys.readouterr().out.splitlines()
        assert "uncalibrated" in lines[0] and "calibrated" in lines[0]
        assert [l.split()[0] for l in lines[1:]] == ["log_loss", "brier", "accuracy"]
        for name in ("uncalibrated", "calibrated"):
            text = (tmp_path / f"rel_{name}.csv").read_text().splitlines()
            assert text[0] == "bin_lo,bin_hi,count,mean_score,frac_pos"
            assert len(text) == 11


class TestCvCalibrate:
    def test_external_oof(self, tmp_path, multiclass_csv):
        assert run("cv-calibrate", "--oof", multiclass_csv, "--labels-col", "label",
                   "--output", tmp_path / "c.json", *FAST) == 0
        assert load_calibrator(tmp_path / "c.json").n_classes == 3

    def test_builtin_trainer_with_test_file(self, tmp_path):
        r = np.random.default_rng(1)
        y = r.integers(0, 2, 400)
        X = r.normal(size=(400, 2)) + 1.5 * y[:, None]
        for name, rows in (("train", slice(0, 300)), ("test", slice(300, 400))):
            with open(tmp_path / f"{name}.csv", "w") as fh:
                fh.write("a,b,label\n")
                for (a, b), lab in zip(X[rows], y[rows]):
                    fh.write(f"{float(a)!r},{float(b)!r},{lab}\n")
        assert run("cv-calibrate", "--features", tmp_path / "train.csv", "--trainer", "logistic", "--sharpen", 3,
                   "--output", tmp_path / "c.json", "--test", tmp_path / "test.csv",
                   "--predictions-output", tmp_path / "p.csv", "--uncalibrated-output", tmp_path / "u.csv",
                   "--model-output", tmp_path / "m.json", *FAST) == 0
        cal, _ = load_probability_matrix(tmp_path / "p.csv")
        raw, labels = load_probability_matrix(tmp_path / "u.csv")
        assert metrics.log_loss(cal, labels) < metrics.log_loss(raw, labels)
        assert json.loads((tmp_path / "m.json").read_text())["model"]["kind"] == "multinomial_logistic"

    def test_categorical_nb(self, tmp_path):
        r = np.random.default_rng(2)
        y = r.integers(0, 2, 300)
        with open(tmp_path / "f.csv", "w") as fh:
            fh.write("colour,size,label\n")
            for lab in y:
                c = "red" if r.uniform() < (0.8 if lab else 0.3) else "blue"
                s = r.choice(["s", "m", "l"])
                fh.write(f"{c},{s},{'>50K' if lab else '<=50K'}\n")
        assert run("cv-calibrate", "--features", tmp_path / "f.csv", "--trainer", "categorical_nb",
                   "--folds", 5, "--output", tmp_path / "c.json", *FAST) == 0
        assert load_calibrator(tmp_path / "c.json").class_names == ("<=50K", ">50K")

    def test_folds_exceed_rows(self, tmp_path, capsys):
        with open(tmp_path / "f.csv", "w") as fh:
            fh.write("x,label\n0.1,0\n0.2,1\n0.3,0\n")
        assert run("cv-calibrate", "--features", tmp_path / "f.csv", "--trainer", "logistic",
                   "--folds", 5, "--output", tmp_path / "c.json") == 1
        err = capsys.readouterr().err
        assert "folds" in err and "--folds <= 3" in err

    def test_needs_one_source(self, tmp_path, capsys):
        assert run("cv-calibrate", "--output", tmp_path / "c.json") == 1


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "splinecalib", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "cv-calibrate" in out.stdout
