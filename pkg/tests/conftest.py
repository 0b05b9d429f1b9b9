import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
ADULT_DIR = Path(__file__).resolve().parent / "data" / "adult"
sys.path.insert(0, str(ROOT / "scripts"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def calibrated_binary(n, seed):
    """Scores that are already calibrated: labels ~ Bernoulli(score)."""
    r = np.random.default_rng(seed)
    s = r.uniform(size=n)
    return s, (r.uniform(size=n) < s).astype(np.int64)


def write_binary_csv(path, scores, labels):
    with open(path, "w") as fh:
        fh.write("score,label\n")
        for s, y in zip(scores, labels):
            fh.write(f"{float(s)!r},{int(y)}\n")
    return path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
