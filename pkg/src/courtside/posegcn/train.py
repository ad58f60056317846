"""Seeded training loop with early stopping and class-weighted loss."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import GcnModel, Variant, class_weighted_cross_entropy, softmax


class TrainError(RuntimeError):
    pass


@dataclass
class Sample:
    pose_a: np.ndarray
    target: int
    pose_b: Optional[np.ndarray] = None


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs_max: int = 200
    batch_size: int = 32
    early_stop_patience: int = 20
    class_weights: Optional[np.ndarray] = None  # default: inverse frequency
    seed: int = 0
    optimizer: str = "sgd"  # "sgd" (momentum 0.9) or "adamw"
    momentum: float = 0.9
    weight_decay: float = 1e-4  # adamw only
    backbone_lr_scale: float = 0.1  # adamw: backbone rate = head rate * scale

    def __post_init__(self):
        if self.early_stop_patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "train_accuracy": self.train_accuracy,
            "val_loss": self.val_loss,
            "val_accuracy": self.val_accuracy,
            "best_epoch": self.best_epoch,
        }


def inverse_frequency_weights(targets: Sequence[int], num_classes: int) -> np.ndarray:
    """Inverse class-frequency weights, normalized to mean 1."""
    counts = np.bincount(list(targets), minlength=num_classes).astype(float)
    weights = np.where(counts > 0, 1.0 / np.maximum(counts, 1.0), 0.0)
    present = weights > 0
    if present.any():
        weights[present] *= present.sum() / weights[present].sum()
    weights[~present] = 1.0
    return weights


def _evaluate(model: GcnModel, samples: Sequence[Sample], weights: np.ndarray):
    total, correct = 0.0, 0
    for s in samples:
        z, _ = model.logits(s.pose_a, s.pose_b)
        loss, _ = class_weighted_cross_entropy(z, s.target, weights)
        total += loss
        if int(np.argmax(softmax(z))) == s.target:
            correct += 1
    return total / len(samples), correct / len(samples)


def train(
    model: GcnModel,
    train_samples: Sequence[Sample],
    val_samples: Sequence[Sample],
    config: TrainConfig,
) -> History:
    """Train in place; returns the per-epoch history.

    Fully deterministic given the config seed: shuffling comes from a
    dedicated generator and the model keeps the weights from the epoch with
    the best validation loss. Training stops once the validation loss fails
    to improve for `early_stop_patience` consecutive epochs.
    """
    if not train_samples:
        raise TrainError("empty training split")
    if not val_samples:
        raise TrainError("empty validation split")
    for s in train_samples:
        if (s.pose_b is not None) != (model.variant is Variant.DOUBLE_POSE):
            raise TrainError("sample arity does not match model variant")

    weights = config.class_weights
    if weights is None:
        weights = inverse_frequency_weights(
            [s.target for s in train_samples], model.num_classes
        )
    weights = np.asarray(weights, dtype=float)

    rng = np.random.default_rng(config.seed)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    adam_m = {k: np.zeros_like(v) for k, v in model.params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in model.params.items()}
    step = 0

    history = History()
    best_val = np.inf
    best_params = model.copy_params()
    stale = 0

    for epoch in range(1, config.epochs_max + 1):
        order = rng.permutation(len(train_samples))
        for start in range(0, len(order), config.batch_size):
            batch = [train_samples[i] for i in order[start : start + config.batch_size]]
            grads = {k: np.zeros_like(v) for k, v in model.params.items()}
            for s in batch:
                z, caches = model.logits(s.pose_a, s.pose_b)
                loss, dlogits = class_weighted_cross_entropy(z, s.target, weights)
                if not np.isfinite(loss):
                    raise TrainError(
                        f"non-finite loss at epoch {epoch}, batch offset {start}"
                    )
                for k, g in model.backward(caches, dlogits).items():
                    grads[k] += g
            for k in grads:
                grads[k] /= len(batch)
            step += 1
            _apply_update(model, grads, velocity, adam_m, adam_v, step, config)

        train_loss, train_acc = _evaluate(model, train_samples, weights)
        val_loss, val_acc = _evaluate(model, val_samples, weights)
        history.train_loss.append(train_loss)
        history.train_accuracy.append(train_acc)
        history.val_loss.append(val_loss)
        history.val_accuracy.append(val_acc)

        if val_loss < best_val:
            best_val = val_loss
            best_params = model.copy_params()
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                break

    model.set_params(best_params)
    return history


def _apply_update(model, grads, velocity, adam_m, adam_v, step, config: TrainConfig):
    lr = config.learning_rate
    if config.optimizer == "sgd":
        for k, g in grads.items():
            velocity[k] = config.momentum * velocity[k] - lr * g
            model.params[k] += velocity[k]
    elif config.optimizer == "adamw":
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        for k, g in grads.items():
            rate = lr * (config.backbone_lr_scale if k.startswith("backbone") else 1.0)
            adam_m[k] = beta1 * adam_m[k] + (1 - beta1) * g
            adam_v[k] = beta2 * adam_v[k] + (1 - beta2) * g * g
            m_hat = adam_m[k] / (1 - beta1**step)
            v_hat = adam_v[k] / (1 - beta2**step)
            model.params[k] -= rate * (
                m_hat / (np.sqrt(v_hat) + eps) + config.weight_decay * model.params[k]
            )
    else:
        raise TrainError(f"unknown optimizer {config.optimizer!r}")
