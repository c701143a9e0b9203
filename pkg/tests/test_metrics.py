import math

import numpy as np
import numpy.testing as npt
import pytest

from fedal.errors import DomainError
from fedal.metrics import (EvalRecord, auc_ovr_macro, confusion_matrix,
                           cross_client_macro, evaluate_model, macro_f1,
                           micro_f1, paired_t_test, per_class_f1)
from fedal.model import init_params


def brute_force_auc(scores, positives):
    """Pair-counting oracle: wins + half credit for ties."""
    pos = scores[positives]
    neg = scores[~positives]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def brute_force_ovr(y, probs):
    present = np.unique(y)
    return float(np.mean([brute_force_auc(probs[:, c], y == c) for c in present]))


class TestConfusionMatrix:
    def test_hand_case(self):
        cm = confusion_matrix([0, 0, 1, 2], [0, 1, 1, 2], 3)
        npt.assert_array_equal(cm, [[1, 1, 0], [0, 1, 0], [0, 0, 1]])

    def test_perfect_is_diagonal(self):
        y = np.array([0, 1, 2, 1, 0])
        cm = confusion_matrix(y, y, 3)
        assert np.all(cm == np.diag(np.diag(cm)))

    def test_total_equals_sample_count(self):
        rng = np.random.default_rng(0)
        y_true = rng.integers(0, 4, 57)
        y_pred = rng.integers(0, 4, 57)
        assert confusion_matrix(y_true, y_pred, 4).sum() == 57

    def test_out_of_range_label(self):
        with pytest.raises(DomainError):
            confusion_matrix([0, 3], [0, 0], 3)


class TestF1:
    def test_perfect_scores(self):
        cm = confusion_matrix([0, 1, 2], [0, 1, 2], 3)
        assert micro_f1(cm) == 1.0
        assert macro_f1(cm) == 1.0

    def test_micro_hand_case(self):
        cm = confusion_matrix([0, 0, 1, 2], [0, 1, 1, 2], 3)
        assert micro_f1(cm) == pytest.approx(0.75)

    def test_macro_hand_case(self):
        cm = confusion_matrix([0, 0, 1, 2], [0, 1, 1, 2], 3)
        expected = (2 / 3 + 2 / 3 + 1.0) / 3
        assert macro_f1(cm) == pytest.approx(expected, abs=1e-12)

    def test_micro_equals_accuracy_randomized(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            n = rng.integers(2, 40)
            c = rng.integers(2, 6)
            y_true = rng.integers(0, c, n)
            y_pred = rng.integers(0, c, n)
            cm = confusion_matrix(y_true, y_pred, c)
            assert micro_f1(cm) == pytest.approx(np.mean(y_true == y_pred))

    def test_absent_class_contributes_zero(self):
        # class 2 never appears in truth or prediction
        cm = confusion_matrix([0, 1, 0, 1], [0, 1, 0, 1], 3)
        npt.assert_allclose(per_class_f1(cm), [1.0, 1.0, 0.0])
        assert macro_f1(cm) == pytest.approx(2 / 3)

    def test_empty_matrix_rejected(self):
        with pytest.raises(DomainError):
            micro_f1(np.zeros((3, 3), dtype=int))


class TestAuc:
    def test_perfect_separation(self):
        y = np.array([0, 0, 1, 1])
        probs = np.array([[0.9, 0.1], [0.8, 0.2], [0.1, 0.9], [0.2, 0.8]])
        assert auc_ovr_macro(y, probs) == 1.0

    def test_reversal_symmetry(self):
        rng = np.random.default_rng(2)
        y = rng.integers(0, 2, 30)
        scores = rng.random((30, 2))
        forward = auc_ovr_macro(y, scores)
        assert auc_ovr_macro(y, 1 - scores) == pytest.approx(1 - forward)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = rng.integers(4, 51)
            c = rng.integers(2, 5)
            y = rng.integers(0, c, n)
            if len(np.unique(y)) < 2:
                continue
            probs = rng.random((n, c))
            # quantize to force ties through the 0.5-credit path
            probs = np.round(probs, 1)
            assert auc_ovr_macro(y, probs) == pytest.approx(brute_force_ovr(y, probs))

    def test_six_sample_hand_case(self):
        y = np.array([0, 0, 0, 1, 1, 1])
        p1 = np.array([0.2, 0.5, 0.5, 0.5, 0.8, 0.9])
        probs = np.column_stack([1 - p1, p1])
        # pairs: (0.5,0.5)x2 ties -> 1.0; all other 7 pairs are wins
        expected = (7 + 2 * 0.5) / 9
        assert auc_ovr_macro(y, probs) == pytest.approx(expected)

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(4)
        y = rng.integers(0, 2, 10000)
        probs = rng.random((10000, 2))
        assert auc_ovr_macro(y, probs) == pytest.approx(0.5, abs=0.05)

    def test_absent_class_skipped(self):
        y = np.array([0, 0, 1, 1])  # class 2 absent
        probs = np.array([[0.8, 0.1, 0.1], [0.7, 0.2, 0.1],
                          [0.2, 0.7, 0.1], [0.1, 0.8, 0.1]])
        assert auc_ovr_macro(y, probs) == 1.0

    def test_single_class_rejected(self):
        with pytest.raises(DomainError):
            auc_ovr_macro([1, 1, 1], np.full((3, 2), 0.5))


class TestPairedT:
    def test_textbook_five_pairs(self):
        # d = (2, 1, -1, 2, 2), mean 1.2, s^2 = 1.7; p from the t(4) CDF
        t, p = paired_t_test([12, 14, 11, 16, 13], [10, 13, 12, 14, 11])
        assert t == pytest.approx(2.057983021710106, abs=1e-9)
        assert p == pytest.approx(0.1087009513249236, abs=1e-6)

    def test_identical_samples(self):
        t, p = paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert (t, p) == (0.0, 1.0)

    def test_swap_negates_t_preserves_p(self):
        a = [0.6, 0.7, 0.65, 0.72]
        b = [0.5, 0.72, 0.6, 0.69]
        t1, p1 = paired_t_test(a, b)
        t2, p2 = paired_t_test(b, a)
        assert t1 == pytest.approx(-t2)
        assert p1 == pytest.approx(p2)

    def test_constant_nonzero_shift(self):
        t, p = paired_t_test([2.0, 3.0], [1.0, 2.0])
        assert math.isinf(t) and p == 0.0

    def test_too_short(self):
        with pytest.raises(DomainError):
            paired_t_test([1.0], [2.0])


def record(client, macro=0.7, micro=0.8, auc=0.9, ratio=0.5):
    return EvalRecord(client_id=client, round=3, sample_ratio=ratio,
                      micro_f1=micro, macro_f1=macro, auc=auc,
                      per_class_f1=(0.5, 0.7, 0.9))


class TestCrossClientMacro:
    def test_identical_records_unchanged(self):
        merged = cross_client_macro([record(0), record(1)])
        assert merged.client_id == "macro"
        assert merged.macro_f1 == pytest.approx(0.7)
        assert merged.per_class_f1 == pytest.approx((0.5, 0.7, 0.9))

    def test_two_client_mean(self):
        merged = cross_client_macro([record(0, macro=0.6), record(1, macro=0.8)])
        assert merged.macro_f1 == pytest.approx(0.7)

    def test_four_client_average(self):
        # four per-client scores averaging across clients
        vals = (76.3, 84.3, 82.7, 70.5)
        merged = cross_client_macro([record(i, macro=v / 100) for i, v in enumerate(vals)])
        assert merged.macro_f1 * 100 == pytest.approx(78.45)

    def test_nan_auc_skipped(self):
        merged = cross_client_macro([record(0, auc=float("nan")), record(1, auc=0.8)])
        assert merged.auc == pytest.approx(0.8)

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            cross_client_macro([])


class TestEvaluateModel:
    def test_fields_and_ranges(self):
        params = init_params((4, 3), 0)
        rng = np.random.default_rng(5)
        rec = evaluate_model(params, rng.normal(size=(40, 4)),
                             rng.integers(0, 3, 40), client_id=2,
                             round_index=7, sample_ratio=0.25)
        assert rec.client_id == 2 and rec.round == 7
        assert 0.0 <= rec.micro_f1 <= 1.0
        assert 0.0 <= rec.macro_f1 <= 1.0
        assert 0.0 <= rec.auc <= 1.0
        assert len(rec.per_class_f1) == 3

    def test_single_class_labels_give_nan_auc(self):
        params = init_params((4, 3), 0)
        rec = evaluate_model(params, np.zeros((5, 4)), np.zeros(5, dtype=int),
                             client_id=0, round_index=1, sample_ratio=1.0)
        assert math.isnan(rec.auc)
