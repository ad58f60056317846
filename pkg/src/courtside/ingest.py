"""COCO-style detector output: parsing, per-frame indexing and model inputs.

The annotation documents come from an external detection pipeline (player
boxes plus 17-keypoint poses). This module validates them, indexes them by
(frame, player role) and reshapes keypoints into the 17x3 feature matrices
the pose classifiers consume. Unknown JSON fields are preserved so a
round-trip through parse/serialize is lossless.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .taxonomy import Handedness, PlayerRole

log = logging.getLogger(__name__)

NUM_KEYPOINTS = 17

# COCO keypoint order: nose, eyes, ears, shoulders, elbows, wrists, hips,
# knees, ankles.
KEYPOINT_NAMES = [
    "nose",
    "left_eye", "right_eye",
    "left_ear", "right_ear",
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_wrist", "right_wrist",
    "left_hip", "right_hip",
    "left_knee", "right_knee",
    "left_ankle", "right_ankle",
]


class IngestError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


_KNOWN_IMAGE = {"id", "file_name", "width", "height", "frame_index"}
_KNOWN_CATEGORY = {"id", "name", "role", "handedness"}
_KNOWN_ANNOTATION = {"id", "image_id", "category_id", "bbox", "keypoints", "score"}


@dataclass
class ImageInfo:
    id: int
    file_name: str
    width: int
    height: int
    frame_index: int
    extra: dict = field(default_factory=dict)


@dataclass
class Category:
    id: int
    name: str
    role: Optional[PlayerRole] = None
    handedness: Handedness = Handedness.UNKNOWN
    extra: dict = field(default_factory=dict)


@dataclass
class Annotation:
    id: int
    image_id: int
    category_id: int
    bbox: tuple[float, float, float, float]
    keypoints: Optional[list[float]] = None
    score: float = 1.0
    extra: dict = field(default_factory=dict)


@dataclass
class AnnotationSet:
    images: list[ImageInfo]
    categories: list[Category]
    annotations: list[Annotation]
    extra: dict = field(default_factory=dict)

    def image_by_id(self, image_id: int) -> ImageInfo:
        return self._images_by_id[image_id]

    def category_by_id(self, category_id: int) -> Category:
        return self._categories_by_id[category_id]

    def __post_init__(self):
        self._images_by_id = {im.id: im for im in self.images}
        self._categories_by_id = {c.id: c for c in self.categories}
        if len(self._images_by_id) != len(self.images):
            raise IngestError("duplicate-id", "duplicate image id")
        if len(self._categories_by_id) != len(self.categories):
            raise IngestError("duplicate-id", "duplicate category id")
        for ann in self.annotations:
            if ann.image_id not in self._images_by_id:
                raise IngestError(
                    "dangling-reference",
                    f"annotation {ann.id} references missing image {ann.image_id}",
                )
            if ann.category_id not in self._categories_by_id:
                raise IngestError(
                    "dangling-reference",
                    f"annotation {ann.id} references missing category {ann.category_id}",
                )
            if ann.keypoints is not None and len(ann.keypoints) != NUM_KEYPOINTS * 3:
                raise IngestError(
                    "keypoint-arity",
                    f"annotation {ann.id} has {len(ann.keypoints)} keypoint values, "
                    f"expected {NUM_KEYPOINTS * 3}",
                )


def _clamp_bbox(bbox, width: int, height: int) -> tuple[float, float, float, float]:
    x, y, w, h = (float(v) for v in bbox)
    x0 = min(max(x, 0.0), width)
    y0 = min(max(y, 0.0), height)
    x1 = min(max(x + w, 0.0), width)
    y1 = min(max(y + h, 0.0), height)
    return (x0, y0, x1 - x0, y1 - y0)


def parse_coco(document: str | dict) -> AnnotationSet:
    """Parse and validate a COCO-style JSON document.

    Accepts the JSON text or an already-decoded dict. Bboxes are clamped to
    image bounds; unknown fields are kept in each record's `extra` mapping.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise IngestError("malformed-json", f"invalid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise IngestError("malformed-json", "top-level document must be an object")

    images = []
    for raw in doc.get("images", []):
        try:
            images.append(
                ImageInfo(
                    id=int(raw["id"]),
                    file_name=str(raw["file_name"]),
                    width=int(raw["width"]),
                    height=int(raw["height"]),
                    frame_index=int(raw.get("frame_index", raw["id"])),
                    extra={k: v for k, v in raw.items() if k not in _KNOWN_IMAGE},
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError("malformed-image", f"bad image record {raw!r}: {exc}") from exc

    categories = []
    for raw in doc.get("categories", []):
        try:
            role = PlayerRole(raw["role"].lower()) if raw.get("role") else None
            handedness = (
                Handedness(raw["handedness"].lower())
                if raw.get("handedness")
                else Handedness.UNKNOWN
            )
            categories.append(
                Category(
                    id=int(raw["id"]),
                    name=str(raw.get("name", "")),
                    role=role,
                    handedness=handedness,
                    extra={k: v for k, v in raw.items() if k not in _KNOWN_CATEGORY},
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError("malformed-category", f"bad category {raw!r}: {exc}") from exc

    images_by_id = {im.id: im for im in images}
    annotations = []
    for raw in doc.get("annotations", []):
        try:
            bbox = raw["bbox"]
            if len(bbox) != 4:
                raise IngestError("malformed-bbox", f"bbox must have 4 values: {bbox!r}")
            image = images_by_id.get(int(raw["image_id"]))
            if image is not None:
                bbox = _clamp_bbox(bbox, image.width, image.height)
            else:
                bbox = tuple(float(v) for v in bbox)
            keypoints = raw.get("keypoints")
            annotations.append(
                Annotation(
                    id=int(raw["id"]),
                    image_id=int(raw["image_id"]),
                    category_id=int(raw["category_id"]),
                    bbox=bbox,
                    keypoints=[float(v) for v in keypoints] if keypoints is not None else None,
                    score=float(raw.get("score", 1.0)),
                    extra={k: v for k, v in raw.items() if k not in _KNOWN_ANNOTATION},
                )
            )
        except IngestError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError(
                "malformed-annotation", f"bad annotation {raw!r}: {exc}"
            ) from exc

    return AnnotationSet(
        images=images,
        categories=categories,
        annotations=annotations,
        extra={k: v for k, v in doc.items() if k not in ("images", "categories", "annotations")},
    )


def serialize_coco(aset: AnnotationSet) -> dict:
    """Inverse of parse_coco (up to key ordering and bbox clamping)."""
    doc: dict[str, Any] = dict(aset.extra)
    doc["images"] = [
        {
            "id": im.id,
            "file_name": im.file_name,
            "width": im.width,
            "height": im.height,
            "frame_index": im.frame_index,
            **im.extra,
        }
        for im in aset.images
    ]
    doc["categories"] = [
        {
            "id": c.id,
            "name": c.name,
            **({"role": c.role.value} if c.role else {}),
            "handedness": c.handedness.value,
            **c.extra,
        }
        for c in aset.categories
    ]
    doc["annotations"] = [
        {
            "id": a.id,
            "image_id": a.image_id,
            "category_id": a.category_id,
            "bbox": list(a.bbox),
            **({"keypoints": a.keypoints} if a.keypoints is not None else {}),
            "score": a.score,
            **a.extra,
        }
        for a in aset.annotations
    ]
    return doc


def apply_player_sidecar(aset: AnnotationSet, players: dict) -> None:
    """Merge a players.json sidecar (category id -> role/description/handedness)."""
    for key, info in players.items():
        cat = aset.category_by_id(int(key))
        if "role" in info:
            cat.role = PlayerRole(info["role"].lower())
        if "handedness" in info:
            cat.handedness = Handedness(info["handedness"].lower())
        if "description" in info:
            cat.name = info["description"]


@dataclass
class FrameIndex:
    frames: dict[int, dict[PlayerRole, Annotation]]
    frame_count: int

    def get(self, frame_index: int, role: PlayerRole) -> Optional[Annotation]:
        return self.frames.get(frame_index, {}).get(role)

    def coverage(self, role: PlayerRole) -> float:
        if self.frame_count == 0:
            return 0.0
        present = sum(1 for roles in self.frames.values() if role in roles)
        return present / self.frame_count

    def missing(self, role: PlayerRole) -> list[int]:
        return sorted(
            f for f, roles in self.frames.items() if role not in roles
        )


def index_frames(aset: AnnotationSet) -> FrameIndex:
    """Index annotations by (frame_index, role).

    A deterministic reduction: the result is independent of annotation order,
    so parallel ingestion of frame chunks merges to the same index.
    """
    frames: dict[int, dict[PlayerRole, Annotation]] = {
        im.frame_index: {} for im in aset.images
    }
    for ann in aset.annotations:
        image = aset.image_by_id(ann.image_id)
        role = aset.category_by_id(ann.category_id).role
        if role is None:
            continue
        slot = frames[image.frame_index]
        if role in slot:
            raise IngestError(
                "duplicate-detection",
                f"role {role.value} annotated twice in frame {image.frame_index}",
            )
        slot[role] = ann
    return FrameIndex(frames=frames, frame_count=len(aset.images))


def crop_with_margin(
    bbox: tuple[float, float, float, float],
    frame: tuple[int, int],
    factor: float = 2.0,
) -> tuple[float, float, float, float]:
    """Grow a box about its center by `factor`, clamped to the frame.

    Consumers feeding image classifiers resize the crop to 224x224; that is
    recorded in crop metadata, not done here.
    """
    x, y, w, h = bbox
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate bbox {bbox}")
    if factor < 1:
        raise ValueError("margin factor must be >= 1")
    fw, fh = frame
    cx, cy = x + w / 2.0, y + h / 2.0
    nw, nh = w * factor, h * factor
    x0 = max(cx - nw / 2.0, 0.0)
    y0 = max(cy - nh / 2.0, 0.0)
    x1 = min(cx + nw / 2.0, float(fw))
    y1 = min(cy + nh / 2.0, float(fh))
    return (x0, y0, x1 - x0, y1 - y0)


CROP_TARGET_SIZE = (224, 224)


def pose_features(
    aset: AnnotationSet, index: FrameIndex, frame_index: int, role: PlayerRole
) -> np.ndarray:
    """17x3 (x, y, confidence) matrix for one player in one frame.

    Coordinates stay in image pixels; classifier-side normalization happens
    in the model. Missing keypoints stay as (0, 0, 0) sentinels; a missing
    keypoints field yields an all-zero matrix with a warning.
    """
    ann = index.get(frame_index, role)
    if ann is None:
        raise IngestError(
            "missing-detection",
            f"no detection for {role.value} in frame {frame_index}",
        )
    if ann.keypoints is None:
        warnings.warn(
            f"annotation {ann.id} has no keypoints; using zero pose",
            stacklevel=2,
        )
        return np.zeros((NUM_KEYPOINTS, 3))
    pose = np.asarray(ann.keypoints, dtype=float).reshape(NUM_KEYPOINTS, 3)
    pose[:, 2] = np.clip(pose[:, 2], 0.0, 1.0)
    return pose
