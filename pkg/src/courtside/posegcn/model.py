"""Single- and double-pose graph-convolutional classifiers, numpy-native.

The forward pass is the layer rule sigma(A_norm H W) stacked over a small
backbone, flattened into an affine classifier head with softmax output. The
backward pass is hand-derived so parameter gradients can be checked against
finite differences (see gradient_check).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .graph import COCO_EDGES, NUM_JOINTS, normalized_adjacency

# COCO joint indices used by input normalization.
_L_SHOULDER, _R_SHOULDER = 5, 6
_L_HIP, _R_HIP = 11, 12


class Variant(enum.Enum):
    SINGLE_POSE = "single_pose"
    DOUBLE_POSE = "double_pose"


def normalize_pose(pose: np.ndarray) -> np.ndarray:
    """Translate the hip midpoint to the origin and scale by torso length.

    The confidence channel passes through unchanged. An all-zero (missing)
    pose or a degenerate torso leaves coordinates untouched apart from the
    translation, so sentinel poses stay finite.
    """
    out = np.array(pose, dtype=float)
    hips = (out[_L_HIP, :2] + out[_R_HIP, :2]) / 2.0
    shoulders = (out[_L_SHOULDER, :2] + out[_R_SHOULDER, :2]) / 2.0
    torso = float(np.linalg.norm(shoulders - hips))
    out[:, :2] -= hips
    if torso > 1e-9:
        out[:, :2] /= torso
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def layer_forward(
    adj_norm: np.ndarray, H: np.ndarray, W: np.ndarray, activation: str = "relu"
) -> np.ndarray:
    """One graph-convolution step: activation(adj_norm @ H @ W)."""
    if H.shape[1] != W.shape[0] or adj_norm.shape[1] != H.shape[0]:
        raise ValueError(
            f"dimension mismatch: adj {adj_norm.shape}, H {H.shape}, W {W.shape}"
        )
    Z = adj_norm @ H @ W
    if activation == "relu":
        return np.maximum(Z, 0.0)
    if activation == "identity":
        return Z
    raise ValueError(f"unknown activation {activation!r}")


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class GcnModel:
    variant: Variant
    class_names: list[str]
    hidden_dims: tuple[int, ...] = (64,)
    in_dim: int = 3
    num_nodes: int = NUM_JOINTS
    seed: int = 0
    normalize_input: bool = True
    self_loops: bool = True
    edges: list[tuple[int, int]] = field(default_factory=lambda: list(COCO_EDGES))
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.adj = normalized_adjacency(self.edges, self.num_nodes, self.self_loops)
        if not self.params:
            self._init_params()

    # ---- parameters ------------------------------------------------------

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def _backbone_names(self) -> list[str]:
        if self.variant is Variant.SINGLE_POSE:
            return ["backbone"]
        return ["backbone_a", "backbone_b"]

    @property
    def _layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.in_dim, *self.hidden_dims]
        return list(zip(dims[:-1], dims[1:]))

    def _init_params(self) -> None:
        rng = np.random.default_rng(self.seed)
        for name in self._backbone_names:
            for i, (d_in, d_out) in enumerate(self._layer_dims):
                self.params[f"{name}.{i}.W"] = _glorot(rng, d_in, d_out)
        flat = self.num_nodes * self.hidden_dims[-1] * len(self._backbone_names)
        self.params["classifier.W"] = _glorot(rng, flat, self.num_classes)
        self.params["classifier.b"] = np.zeros(self.num_classes)

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.params = {k: np.array(v, dtype=float) for k, v in params.items()}

    # ---- forward / backward ---------------------------------------------

    def _backbone_forward(self, name: str, pose: np.ndarray) -> tuple[np.ndarray, dict]:
        H = normalize_pose(pose) if self.normalize_input else np.array(pose, dtype=float)
        cache = {"H": [H], "Z": []}
        n_layers = len(self._layer_dims)
        for i in range(n_layers):
            W = self.params[f"{name}.{i}.W"]
            Z = self.adj @ H @ W
            # ReLU on hidden layers, identity on the last backbone layer
            H = np.maximum(Z, 0.0) if i < n_layers - 1 else Z
            cache["Z"].append(Z)
            cache["H"].append(H)
        return H, cache

    def logits(
        self, pose_a: np.ndarray, pose_b: np.ndarray | None = None
    ) -> tuple[np.ndarray, dict]:
        if self.variant is Variant.SINGLE_POSE:
            if pose_b is not None:
                raise ValueError("single-pose model takes exactly one pose")
            poses = [pose_a]
        else:
            if pose_b is None:
                raise ValueError("double-pose model needs a second pose")
            poses = [pose_a, pose_b]
        feats, caches = [], {}
        for name, pose in zip(self._backbone_names, poses):
            out, cache = self._backbone_forward(name, pose)
            feats.append(out.ravel())
            caches[name] = cache
        h = np.concatenate(feats)
        z = h @ self.params["classifier.W"] + self.params["classifier.b"]
        caches["h"] = h
        return z, caches

    def forward(
        self, pose_a: np.ndarray, pose_b: np.ndarray | None = None
    ) -> np.ndarray:
        """Class probabilities (sums to 1)."""
        z, _ = self.logits(pose_a, pose_b)
        return softmax(z)

    def backward(self, caches: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients given d loss / d logits."""
        grads: dict[str, np.ndarray] = {}
        h = caches["h"]
        grads["classifier.W"] = np.outer(h, dlogits)
        grads["classifier.b"] = dlogits.copy()
        dh = self.params["classifier.W"] @ dlogits
        chunk = self.num_nodes * self.hidden_dims[-1]
        n_layers = len(self._layer_dims)
        for bi, name in enumerate(self._backbone_names):
            cache = caches[name]
            dH = dh[bi * chunk : (bi + 1) * chunk].reshape(
                self.num_nodes, self.hidden_dims[-1]
            )
            for i in reversed(range(n_layers)):
                Z = cache["Z"][i]
                dZ = dH if i == n_layers - 1 else dH * (Z > 0)
                H_prev = cache["H"][i]
                AH = self.adj @ H_prev
                grads[f"{name}.{i}.W"] = AH.T @ dZ
                # adjacency is symmetric, so A^T = A
                dH = self.adj @ dZ @ self.params[f"{name}.{i}.W"].T
        return grads


def class_weighted_cross_entropy(
    logits: np.ndarray, target: int, weights: np.ndarray
) -> tuple[float, np.ndarray]:
    """Weighted negative log-likelihood and its gradient w.r.t. the logits.

    loss = -w[target] * log softmax(logits)[target]
    grad = w[target] * (softmax(logits) - onehot(target))
    """
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise ValueError("class weights must be positive")
    if not 0 <= target < len(logits):
        raise ValueError(f"target {target} out of range for {len(logits)} classes")
    z = logits - logits.max()
    log_probs = z - np.log(np.exp(z).sum())
    loss = -weights[target] * log_probs[target]
    grad = np.exp(log_probs)
    grad[target] -= 1.0
    grad *= weights[target]
    return float(loss), grad


def gradient_check(
    model: GcnModel,
    pose_a: np.ndarray,
    pose_b: np.ndarray | None = None,
    target: int = 0,
    weights: np.ndarray | None = None,
    epsilon: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if not 0 < epsilon <= 1e-2:
        raise ValueError("epsilon must be in (0, 1e-2]")
    if weights is None:
        weights = np.ones(model.num_classes)

    def loss_only() -> float:
        z, _ = model.logits(pose_a, pose_b)
        return class_weighted_cross_entropy(z, target, weights)[0]

    z, caches = model.logits(pose_a, pose_b)
    _, dlogits = class_weighted_cross_entropy(z, target, weights)
    analytic = model.backward(caches, dlogits)

    max_err = 0.0
    for name, param in model.params.items():
        grad = analytic[name]
        it = np.nditer(param, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = param[idx]
            param[idx] = orig + epsilon
            up = loss_only()
            param[idx] = orig - epsilon
            down = loss_only()
            param[idx] = orig
            numeric = (up - down) / (2 * epsilon)
            a = grad[idx]
            err = abs(a - numeric) / max(abs(a) + abs(numeric), 1e-6)
            max_err = max(max_err, err)
    return max_err
