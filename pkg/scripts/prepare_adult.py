"""Convert the UCI Adult (census income) files into splinecalib feature CSVs.

Keeps the six categorical features used for the naive Bayes experiment
(workclass, education-num, marital-status, relationship, race, sex) and a
0/1 label for income >50K. Both ``adult.data`` and ``adult.test`` are
accepted, plain or gzipped; the test file's leading comment line and the
trailing "." on its labels are handled.

    python scripts/prepare_adult.py adult.data.gz adult_train.csv
    python scripts/prepare_adult.py adult.test.gz adult_test.csv
"""

import argparse
import csv
import gzip
from pathlib import Path

COLUMNS = (
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
)
FEATURES = ("workclass", "education-num", "marital-status", "relationship", "race", "sex")


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return path.open(encoding="utf-8")


def read_adult(path):
    """Return ``(features, labels)``: rows of six strings and 0/1 ints."""
    features, labels = [], []
    index = [COLUMNS.index(c) for c in FEATURES]
    with _open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != len(COLUMNS):
                continue
            income = fields[-1].rstrip(".")
            features.append([fields[i] for i in index])
            labels.append(1 if income == ">50K" else 0)
    return features, labels


def write_csv(features, labels, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*FEATURES, "label"])
        for row, y in zip(features, labels):
            w.writerow([*row, y])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source", help="adult.data or adult.test, optionally .gz")
    ap.add_argument("output", help="destination CSV")
    args = ap.parse_args(argv)
    features, labels = read_adult(args.source)
    write_csv(features, labels, args.output)
    print(f"wrote {len(labels)} rows ({sum(labels)} positive) to {args.output}")


if __name__ == "__main__":
    main()
