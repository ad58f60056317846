"""Evaluation metrics and the train/val/test split protocol.

Macro metrics average per-class rates without support weighting. One-vs-rest
AUC uses pair counting with ties scored 0.5; classes lacking positives or
negatives are excluded from the macro mean and reported.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class EvalError(ValueError):
    pass


@dataclass
class EvalResult:
    task: str
    accuracy: float
    macro_precision: float
    macro_recall: float
    confusion: list[list[int]]
    per_class_precision: list[float]
    per_class_recall: list[float]
    macro_auc: Optional[float] = None
    per_class_auc: list[Optional[float]] = field(default_factory=list)
    skipped_auc_classes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_auc": self.macro_auc,
            "confusion": self.confusion,
            "per_class": {
                "precision": self.per_class_precision,
                "recall": self.per_class_recall,
                "auc": self.per_class_auc,
            },
            "skipped_auc_classes": self.skipped_auc_classes,
        }


def confusion_and_rates(
    predictions: Sequence[int],
    truths: Sequence[int],
    num_classes: int,
    task: str = "",
) -> EvalResult:
    """Confusion matrix, accuracy and macro precision/recall.

    Macro recall averages only classes present in the truth; a class that was
    never predicted contributes precision 0.
    """
    if len(predictions) != len(truths):
        raise EvalError("predictions and truths must have equal length")
    if not truths:
        raise EvalError("empty input")
    confusion = np.zeros((num_classes, num_classes), dtype=int)
    for t, p in zip(truths, predictions):
        confusion[t][p] += 1

    supports = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    diag = np.diag(confusion)

    precision = [
        float(diag[k] / predicted[k]) if predicted[k] > 0 else 0.0
        for k in range(num_classes)
    ]
    recall = [
        float(diag[k] / supports[k]) if supports[k] > 0 else 0.0
        for k in range(num_classes)
    ]
    with_support = [k for k in range(num_classes) if supports[k] > 0]
    macro_precision = float(np.mean([precision[k] for k in with_support]))
    macro_recall = float(np.mean([recall[k] for k in with_support]))
    accuracy = float(diag.sum() / confusion.sum())
    return EvalResult(
        task=task,
        accuracy=accuracy,
        macro_precision=macro_precision,
        macro_recall=macro_recall,
        confusion=confusion.tolist(),
        per_class_precision=precision,
        per_class_recall=recall,
    )


def binary_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Pair-counting AUC: P(score_pos > score_neg) with ties counted 0.5.

    Computed via rank sums, equivalent to enumerating all positive/negative
    pairs but O(n log n).
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUC needs at least one positive and one negative")
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    # average ranks (1-based) with ties sharing their mean rank
    ranks = np.empty(len(scores))
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[labels].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def ovr_auc(
    scores: np.ndarray, truths: Sequence[int], num_classes: int
) -> tuple[float, list[Optional[float]], list[int]]:
    """Macro one-vs-rest AUC.

    scores is (n_samples, num_classes) of per-class probabilities. Returns
    (macro_auc, per_class_auc, skipped_classes); skipped classes lack either
    positives or negatives.
    """
    scores = np.asarray(scores, dtype=float)
    truths = np.asarray(truths, dtype=int)
    if scores.shape != (len(truths), num_classes):
        raise EvalError(f"scores must be (n, {num_classes}), got {scores.shape}")
    per_class: list[Optional[float]] = []
    skipped: list[int] = []
    for k in range(num_classes):
        positives = truths == k
        if positives.all() or not positives.any():
            per_class.append(None)
            skipped.append(k)
            continue
        per_class.append(binary_auc(scores[:, k], positives))
    evaluable = [a for a in per_class if a is not None]
    if not evaluable:
        raise EvalError("no class with both positives and negatives")
    return float(np.mean(evaluable)), per_class, skipped


def evaluate(
    predictions: Sequence[int],
    truths: Sequence[int],
    num_classes: int,
    scores: Optional[np.ndarray] = None,
    task: str = "",
) -> EvalResult:
    result = confusion_and_rates(predictions, truths, num_classes, task)
    if scores is not None:
        try:
            macro, per_class, skipped = ovr_auc(scores, truths, num_classes)
            result.macro_auc = macro
            result.per_class_auc = per_class
            result.skipped_auc_classes = skipped
        except EvalError:
            result.macro_auc = None
    return result


@dataclass
class SplitPlan:
    train_events: list
    val_events: list
    test_events: list
    ratio: float
    seed: int
    holdout_video_ids: list[str]

    def to_dict(self) -> dict:
        return {
            "train": self.train_events,
            "val": self.val_events,
            "test": self.test_events,
            "ratio": self.ratio,
            "seed": self.seed,
            "holdout_video_ids": self.holdout_video_ids,
        }


def split_dataset(
    events: Sequence[dict],
    ratio: float = 0.7,
    seed: int = 0,
    holdouts: Sequence[str] = (),
) -> SplitPlan:
    """Seeded event-level split with held-out test videos.

    Events from holdout videos go to test exclusively; the rest are shuffled
    by a dedicated seeded generator, the first floor(ratio * N) to train and
    the remainder to val.
    """
    if not 0 < ratio < 1:
        raise EvalError("ratio must be in (0, 1)")
    holdout_set = set(holdouts)
    test = [e for e in events if e["video_id"] in holdout_set]
    rest = [e for e in events if e["video_id"] not in holdout_set]
    if not rest:
        raise EvalError("no events left after removing holdout videos")
    rest = list(rest)
    random.Random(seed).shuffle(rest)
    cut = int(ratio * len(rest))
    return SplitPlan(
        train_events=rest[:cut],
        val_events=rest[cut:],
        test_events=test,
        ratio=ratio,
        seed=seed,
        holdout_video_ids=sorted(holdout_set),
    )
