import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import calibrated_binary
from splinecalib.data import LabeledScores
from splinecalib.errors import DimensionMismatchError
from splinecalib.metrics import (
    RELIABILITY_HEADER,
    accuracy,
    binary_brier_score,
    binary_log_loss,
    brier_score,
    log_loss,
    pooled_one_vs_rest,
    reliability_bins,
)

prob_rows = st.integers(2, 6).flatmap(
    lambda m: arrays(np.float64, st.tuples(st.integers(1, 30), st.just(m)), elements=st.floats(0.01, 1.0))
).map(lambda a: a / a.sum(axis=1, keepdims=True))


class TestLogLoss:
    def test_perfect(self):
        assert log_loss(np.eye(3), [0, 1, 2]) == pytest.approx(-math.log(1 - 1e-15), abs=1e-18)

    def test_uniform_binary(self):
        assert log_loss(np.full(10, 0.5), [0, 1] * 5) == pytest.approx(math.log(2), abs=1e-15)
        assert binary_log_loss(np.full(4, 0.5), [0, 1, 1, 0]) == pytest.approx(0.693147, abs=1e-6)

    def test_clamped(self):
        assert log_loss(np.array([[1.0, 0.0]]), [1]) == pytest.approx(-math.log(1e-15))
        assert log_loss(np.array([[1.0, 0.0]]), [1]) == pytest.approx(34.54, abs=0.01)

    def test_binary_forms_agree(self):
        s, y = calibrated_binary(200, seed=0)
        assert log_loss(s, y) == pytest.approx(binary_log_loss(s, y), rel=1e-12)

    @given(prob_rows, st.randoms())
    @settings(max_examples=40, deadline=None)
    def test_row_permutation_invariant(self, p, rnd):
        y = np.arange(p.shape[0]) % p.shape[1]
        perm = list(range(p.shape[0]))
        rnd.shuffle(perm)
        assert log_loss(p[perm], y[perm]) == pytest.approx(log_loss(p, y), rel=1e-12)
        assert brier_score(p[perm], y[perm]) == pytest.approx(brier_score(p, y), rel=1e-12)


class TestBrier:
    def test_perfect(self):
        assert brier_score(np.eye(4), [0, 1, 2, 3]) == 0.0

    def test_binary_pair(self):
        assert brier_score(np.array([[0.7, 0.3]]), [0]) == pytest.approx(0.18)
        assert binary_brier_score([0.3], [0]) == pytest.approx(0.09)

    def test_uniform_ten(self):
        assert brier_score(np.full((5, 10), 0.1), [0, 3, 9, 2, 2]) == pytest.approx(0.9)

    @given(prob_rows)
    @settings(max_examples=40, deadline=None)
    def test_range(self, p):
        b = brier_score(p, np.zeros(p.shape[0], dtype=int))
        assert 0 <= b <= 2


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy(np.eye(3), [0, 1, 2]) == 1.0

    def test_tie_lowest_index(self):
        assert accuracy(np.array([[0.5, 0.5]]), [0]) == 1.0
        assert accuracy(np.array([[0.5, 0.5]]), [1]) == 0.0

    def test_empty(self):
        with pytest.raises(DimensionMismatchError):
            accuracy(np.empty((0, 2)), np.empty(0, dtype=int))
        with pytest.raises(DimensionMismatchError):
            log_loss(np.empty((0, 2)), np.empty(0, dtype=int))


class TestReliability:
    def test_miscalibration_pattern(self):
        s = np.full(100, 0.6)
        y = np.r_[np.ones(80), np.zeros(20)].astype(int)
        bins = reliability_bins(LabeledScores(s, y), n_bins=10)
        k = 6
        assert (bins.lower[k], bins.upper[k]) == (0.6, 0.7)
        assert bins.count[k] == 100 and bins.count.sum() == 100
        assert bins.mean_score[k] == pytest.approx(0.6) and bins.frac_pos[k] == pytest.approx(0.8)
        assert bins.empty.sum() == 9

    def test_calibrated_within_binomial_noise(self):
        s, y = calibrated_binary(100_000, seed=11)
        bins = reliability_bins(LabeledScores(s, y))
        ok = ~bins.empty
        assert np.all(np.abs(bins.mean_score[ok] - bins.frac_pos[ok]) < 0.02)

    def test_single_bin(self):
        s, y = calibrated_binary(500, seed=2)
        bins = reliability_bins(s, 1, labels=y)
        assert bins.mean_score[0] == pytest.approx(s.mean())
        assert bins.frac_pos[0] == pytest.approx(y.mean())

    def test_endpoint_in_last_bin(self):
        bins = reliability_bins(LabeledScores([0.0, 1.0], [0, 1]), 4)
        np.testing.assert_array_equal(bins.count, [1, 0, 0, 1])

    @given(
        arrays(np.float64, st.integers(1, 50), elements=st.floats(0, 1)),
        arrays(np.float64, st.integers(1, 50), elements=st.floats(0, 1)),
        st.integers(1, 25),
    )
    @settings(max_examples=40, deadline=None)
    def test_counts_add_under_concatenation(self, a, b, n_bins):
        ya, yb = (a > 0.5).astype(int), (b > 0.3).astype(int)
        ba = reliability_bins(LabeledScores(a, ya), n_bins)
        bb = reliability_bins(LabeledScores(b, yb), n_bins)
        both = reliability_bins(LabeledScores(np.r_[a, b], np.r_[ya, yb]), n_bins)
        np.testing.assert_array_equal(both.count, ba.count + bb.count)
        assert both.count.sum() == a.size + b.size

    def test_csv(self, tmp_path):
        bins = reliability_bins(LabeledScores([0.05, 0.95], [0, 1]), 3)
        bins.to_csv(tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "bin_lo,bin_hi,count,mean_score,frac_pos"
        assert ",".join(RELIABILITY_HEADER) == lines[0]
        assert lines[2].endswith(",0,,")

    def test_pooled(self):
        pooled = pooled_one_vs_rest(np.array([[0.7, 0.2, 0.1]]), [1])
        np.testing.assert_array_equal(pooled.labels, [0, 1, 0])
        np.testing.assert_array_equal(pooled.scores, [0.7, 0.2, 0.1])
