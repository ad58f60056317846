import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from courtside.evalkit import (
    EvalError,
    binary_auc,
    confusion_and_rates,
    evaluate,
    ovr_auc,
    split_dataset,
)


def brute_force_auc(scores, labels):
    """Direct pair enumeration oracle for the rank-sum implementation."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    total = 0.0
    for p, n in itertools.product(pos, neg):
        if p > n:
            total += 1.0
        elif p == n:
            total += 0.5
    return total / (len(pos) * len(neg))


class TestConfusion:
    def test_hand_worked_example(self):
        truths = [0, 0, 0, 1, 1, 2]
        preds = [0, 0, 1, 1, 1, 0]
        result = confusion_and_rates(preds, truths, 3)
        assert result.confusion == [[2, 1, 0], [0, 2, 0], [1, 0, 0]]
        assert result.accuracy == pytest.approx(4 / 6)
        # precision: 2/3, 2/3, class 2 never predicted -> 0
        assert result.macro_precision == pytest.approx((2 / 3 + 2 / 3 + 0) / 3)
        # recall: 2/3, 1, 0
        assert result.macro_recall == pytest.approx((2 / 3 + 1 + 0) / 3)

    def test_zero_support_class_excluded_from_macro(self):
        result = confusion_and_rates([0, 1], [0, 1], 3)
        assert result.macro_precision == 1.0
        assert result.macro_recall == 1.0

    def test_perfect(self):
        result = confusion_and_rates([0, 1, 2], [0, 1, 2], 3)
        assert (result.accuracy, result.macro_precision, result.macro_recall) == (1, 1, 1)

    def test_length_mismatch_and_empty(self):
        with pytest.raises(EvalError):
            confusion_and_rates([0], [0, 1], 2)
        with pytest.raises(EvalError):
            confusion_and_rates([], [], 2)


class TestBinaryAuc:
    def test_perfect_separation(self):
        assert binary_auc([0.9, 0.8, 0.2, 0.1], [True, True, False, False]) == 1.0

    def test_inverted(self):
        assert binary_auc([0.1, 0.9], [True, False]) == 0.0

    def test_all_tied_is_half(self):
        assert binary_auc([0.5, 0.5, 0.5, 0.5], [True, False, True, False]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(EvalError):
            binary_auc([0.1, 0.2], [True, True])

    def test_matches_pair_enumeration_on_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(2, 30))
            # coarse quantization to force plenty of ties
            scores = np.round(rng.uniform(size=n), 1)
            labels = rng.uniform(size=n) < 0.5
            if labels.all() or not labels.any():
                continue
            got = binary_auc(scores, labels)
            want = brute_force_auc(scores.tolist(), labels.tolist())
            assert got == pytest.approx(want, abs=1e-12)

    @given(
        scores=st.lists(st.integers(0, 5), min_size=4, max_size=20),
        flips=st.integers(1, 1000),
    )
    def test_invariant_under_monotone_transforms(self, scores, flips):
        labels = [i % 2 == 0 for i in range(len(scores))]
        base = binary_auc(scores, labels)
        transformed = binary_auc([3 * s + 7 for s in scores], labels)
        assert base == pytest.approx(transformed, abs=1e-12)


class TestOvrAuc:
    def test_skips_absent_classes(self):
        scores = np.array([[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.6, 0.3, 0.1]])
        macro, per_class, skipped = ovr_auc(scores, [0, 1, 0], 3)
        assert skipped == [2]
        assert per_class[2] is None
        assert macro == pytest.approx((per_class[0] + per_class[1]) / 2)

    def test_shape_check(self):
        with pytest.raises(EvalError):
            ovr_auc(np.zeros((3, 2)), [0, 1, 0], 3)

    def test_evaluate_attaches_auc(self):
        scores = np.array([[0.9, 0.1], [0.2, 0.8], [0.7, 0.3], [0.4, 0.6]])
        result = evaluate([0, 1, 0, 1], [0, 1, 0, 1], 2, scores=scores)
        assert result.macro_auc == 1.0
        assert result.skipped_auc_classes == []


class TestSplitDataset:
    def events(self):
        return [
            {"video_id": f"v{i % 4}", "event": i} for i in range(40)
        ]

    def test_holdouts_go_to_test_only(self):
        plan = split_dataset(self.events(), ratio=0.7, seed=1, holdouts=["v0"])
        assert all(e["video_id"] == "v0" for e in plan.test_events)
        assert all(e["video_id"] != "v0" for e in plan.train_events + plan.val_events)
        assert len(plan.test_events) == 10

    def test_ratio_floor(self):
        plan = split_dataset(self.events(), ratio=0.7, seed=0)
        assert len(plan.train_events) == 28  # floor(0.7 * 40)
        assert len(plan.val_events) == 12

    def test_deterministic_per_seed(self):
        a = split_dataset(self.events(), ratio=0.6, seed=5, holdouts=["v2"])
        b = split_dataset(self.events(), ratio=0.6, seed=5, holdouts=["v2"])
        assert a.to_dict() == b.to_dict()
        c = split_dataset(self.events(), ratio=0.6, seed=6, holdouts=["v2"])
        assert a.train_events != c.train_events

    def test_partition_is_exact(self):
        plan = split_dataset(self.events(), ratio=0.5, seed=2, holdouts=["v3"])
        merged = plan.train_events + plan.val_events + plan.test_events
        key = lambda e: e["event"]
        assert sorted(merged, key=key) == sorted(self.events(), key=key)

    def test_bad_ratio(self):
        for ratio in (0.0, 1.0, -0.2):
            with pytest.raises(EvalError):
                split_dataset(self.events(), ratio=ratio)

    def test_all_events_held_out(self):
        events = [{"video_id": "v0", "event": 0}]
        with pytest.raises(EvalError):
            split_dataset(events, holdouts=["v0"])
