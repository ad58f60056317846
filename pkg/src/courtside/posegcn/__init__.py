from .graph import COCO_EDGES, NUM_JOINTS, adjacency, normalized_adjacency
from .model import (
    GcnModel,
    Variant,
    class_weighted_cross_entropy,
    gradient_check,
    layer_forward,
    normalize_pose,
    softmax,
)
from .train import (
    History,
    Sample,
    TrainConfig,
    TrainError,
    inverse_frequency_weights,
    train,
)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "COCO_EDGES",
    "NUM_JOINTS",
    "adjacency",
    "normalized_adjacency",
    "GcnModel",
    "Variant",
    "class_weighted_cross_entropy",
    "gradient_check",
    "layer_forward",
    "normalize_pose",
    "softmax",
    "History",
    "Sample",
    "TrainConfig",
    "TrainError",
    "inverse_frequency_weights",
    "train",
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
]
