"""Skeletal graph structure and adjacency normalization."""

from __future__ import annotations

import numpy as np

NUM_JOINTS = 17

# COCO 17-joint skeleton: links between physically connected joints
# (shoulder-elbow, elbow-wrist, hip-knee, ...) plus the face links.
COCO_EDGES = [
    (15, 13), (13, 11), (16, 14), (14, 12),   # legs
    (11, 12),                                  # pelvis
    (5, 11), (6, 12),                          # torso sides
    (5, 6),                                    # shoulders
    (5, 7), (7, 9), (6, 8), (8, 10),           # arms
    (1, 2), (0, 1), (0, 2), (1, 3), (2, 4),    # face
    (3, 5), (4, 6),                            # ears to shoulders
]


def adjacency(edges: list[tuple[int, int]], n: int) -> np.ndarray:
    """Binary symmetric adjacency with zero diagonal."""
    A = np.zeros((n, n))
    for i, j in edges:
        if i == j:
            raise ValueError(f"self-edge ({i},{j}) not allowed")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i},{j}) out of range for {n} nodes")
        A[i, j] = A[j, i] = 1.0
    return A


def normalized_adjacency(
    edges: list[tuple[int, int]], n: int, self_loops: bool = True
) -> np.ndarray:
    """Symmetrically normalized adjacency D^{-1/2} (A + I) D^{-1/2}.

    Self-loops are added by default so each node keeps its own features and
    isolated nodes are not zeroed out; self_loops=False gives the literal
    D^{-1/2} A D^{-1/2} normalization instead.
    """
    A = adjacency(edges, n)
    if self_loops:
        A = A + np.eye(n)
    deg = A.sum(axis=1)
    # normalize via sqrt(d_i * d_j) rather than two separate d^{-1/2} factors;
    # equivalent analytically but exact when d_i * d_j is a perfect square
    scale = np.sqrt(np.outer(deg, deg))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(scale > 0, A / np.where(scale > 0, scale, 1.0), 0.0)
    return out
