"""Automated shot-label generation over a rally.

The workflow walks the hits of a rally in order: court position comes from
geometry, rule-forced fields (second-shot return, non-final outcome = In,
non-serve formation) are filled directly, and everything else is delegated
to a pluggable predictor. Predictors draw from the *legal* value set only,
so generated labels always pass taxonomy validation; raw predictions that
fall outside the legal set are projected back onto it and logged.
"""

from __future__ import annotations

import enum
import logging
import random
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import httpx
import numpy as np

from . import courtgeom, taxonomy
from .ingest import AnnotationSet, FrameIndex, IngestError, pose_features
from .rallystore import Rally, VideoRecord
from .taxonomy import (
    Formation,
    Outcome,
    PlayerRole,
    ShotDirection,
    ShotLabel,
    ShotSide,
    ShotType,
)

log = logging.getLogger(__name__)

TASKS = ("side", "shot_type", "direction", "formation", "outcome")

# Enum type per task; enum declaration order doubles as the projection
# tie-break order.
TASK_ENUMS = {
    "side": ShotSide,
    "shot_type": ShotType,
    "direction": ShotDirection,
    "formation": Formation,
    "outcome": Outcome,
}

RALLY_SHOT_TYPES = (ShotType.VOLLEY, ShotType.LOB, ShotType.SMASH, ShotType.SWING)

DEFAULT_FUTURE_FRAMES = 10


class PredictorKind(enum.Enum):
    RANDOM = "random"
    POSE_GCN = "posegcn"
    REMOTE = "remote"


class LabelGenError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def select_future_frame(hit_frame: int, rally_end: int, n: int = DEFAULT_FUTURE_FRAMES) -> int:
    """Frame n ahead of the hit, clamped to the rally end."""
    if hit_frame > rally_end:
        raise ValueError("hit frame after rally end")
    return min(hit_frame + n, rally_end)


@dataclass
class PredictionContext:
    """Inputs available to a predictor for one field of one hit."""

    video_id: str
    frame_index: int
    future_frame_index: int
    hitter: PlayerRole
    partner: PlayerRole
    aset: Optional[AnnotationSet] = None
    index: Optional[FrameIndex] = None

    def hitter_pose(self, frame: Optional[int] = None) -> np.ndarray:
        return self._pose(self.hitter, self.frame_index if frame is None else frame)

    def partner_pose(self) -> np.ndarray:
        return self._pose(self.partner, self.frame_index)

    def _pose(self, role: PlayerRole, frame: int) -> np.ndarray:
        if self.aset is None or self.index is None:
            raise LabelGenError("missing-detection", "no annotations available")
        try:
            return pose_features(self.aset, self.index, frame, role)
        except IngestError as exc:
            raise LabelGenError(exc.code, str(exc)) from exc


class Predictor(Protocol):
    kind: PredictorKind

    def predict(
        self, task: str, legal: list, ctx: PredictionContext
    ) -> tuple[object, float]: ...


def _sorted_legal(task: str, legal) -> list:
    order = list(TASK_ENUMS[task])
    return [v for v in order if v in set(legal)]


def project_to_legal(task: str, value, legal) -> tuple[object, bool]:
    """Clamp a raw prediction onto the legal set (enum-order tie-break)."""
    legal_sorted = _sorted_legal(task, legal)
    if not legal_sorted:
        raise LabelGenError("empty-legal-set", f"no legal values for task {task}")
    if value in legal_sorted:
        return value, False
    return legal_sorted[0], True


class RandomPredictor:
    """Uniform draw over the legal set from a seeded stream."""

    kind = PredictorKind.RANDOM

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def predict(self, task, legal, ctx):
        choices = _sorted_legal(task, legal)
        if not choices:
            raise LabelGenError("empty-legal-set", f"no legal values for task {task}")
        return self._rng.choice(choices), 1.0 / len(choices)


class PoseGcnPredictor:
    """Wraps a trained pose-graph classifier for one task.

    Single-pose models see the hitter's pose at the hit frame. Double-pose
    models pair the hitter with the partner (formation) or with the hitter's
    own pose n frames ahead (direction, outcome).
    """

    kind = PredictorKind.POSE_GCN

    def __init__(self, model):
        self.model = model

    def predict(self, task, legal, ctx):
        from .posegcn import Variant

        pose_a = ctx.hitter_pose()
        pose_b = None
        if self.model.variant is Variant.DOUBLE_POSE:
            if task == "formation":
                pose_b = ctx.partner_pose()
            else:
                pose_b = ctx.hitter_pose(frame=ctx.future_frame_index)
        probs = self.model.forward(pose_a, pose_b)
        enum_cls = TASK_ENUMS[task]
        legal_set = set(legal)
        best, best_p = None, -1.0
        for name, p in zip(self.model.class_names, probs):
            try:
                value = enum_cls(name)
            except ValueError:
                continue
            if value in legal_set and p > best_p:
                best, best_p = value, float(p)
        if best is None:
            value, _ = project_to_legal(task, None, legal)
            return value, 1.0 / len(set(legal))
        return best, best_p


class RemotePredictor:
    """HTTP transport to an external model server (CNN or LLM backends).

    POSTs {task, video_id, frame_index, ...} to <endpoint>/predict and maps
    the {value, confidence} response back onto the task's enum, projecting
    illegal answers onto the legal set.
    """

    kind = PredictorKind.REMOTE

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        retries: int = 1,
        payload_kind: str = "pose",
        client: Optional[httpx.Client] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.payload_kind = payload_kind
        self._client = client or httpx.Client(timeout=timeout)

    def predict(self, task, legal, ctx):
        request = {
            "task": task,
            "video_id": ctx.video_id,
            "frame_index": ctx.frame_index,
            "future_frame_index": ctx.future_frame_index,
            "roles": [ctx.hitter.value, ctx.partner.value],
            "payload_kind": self.payload_kind,
        }
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = self._client.post(f"{self.endpoint}/predict", json=request)
                break
            except httpx.TimeoutException as exc:
                last_exc = exc
            except httpx.HTTPError as exc:
                last_exc = exc
        else:
            code = (
                "remote-timeout"
                if isinstance(last_exc, httpx.TimeoutException)
                else "remote-unreachable"
            )
            raise LabelGenError(code, f"remote predictor failed: {last_exc}")
        if resp.status_code // 100 != 2:
            raise LabelGenError(
                "remote-status", f"remote predictor returned {resp.status_code}"
            )
        try:
            body = resp.json()
            raw_value = body["value"]
            confidence = float(body["confidence"])
        except (ValueError, KeyError, TypeError) as exc:
            raise LabelGenError("remote-schema", f"bad remote response: {exc}") from exc
        try:
            value = TASK_ENUMS[task](str(raw_value).lower())
        except ValueError:
            value = None
        projected, was_projected = project_to_legal(task, value, legal)
        if was_projected:
            log.warning(
                "remote predictor returned illegal %r for task %s; projected to %s",
                raw_value, task, projected,
            )
            confidence = 1.0 / len(set(legal))
        return projected, confidence


class ModelRegistry:
    """Task -> predictor mapping with exactly-once lazy loading.

    Loaders run on first use only; later lookups return the resident
    instance without touching storage (the hot-loading contract). load_count
    per task is observable for tests and the metrics endpoint.
    """

    def __init__(self):
        self._loaders: dict[str, Callable[[], Predictor]] = {}
        self._instances: dict[str, Predictor] = {}
        self._load_counts: dict[str, int] = {}
        self._entry_locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def configure(self, task: str, loader: Callable[[], Predictor]) -> None:
        with self._guard:
            self._loaders[task] = loader
            self._entry_locks.setdefault(task, threading.Lock())
            self._load_counts.setdefault(task, 0)

    def configure_all(self, loader_for: Callable[[str], Callable[[], Predictor]]):
        for task in TASKS:
            self.configure(task, loader_for(task))

    def load_count(self, task: str) -> int:
        return self._load_counts.get(task, 0)

    def get(self, task: str) -> Predictor:
        if task not in self._loaders:
            raise LabelGenError("no-model", f"no predictor configured for task {task}")
        if task in self._instances:
            return self._instances[task]
        with self._entry_locks[task]:
            if task not in self._instances:
                self._instances[task] = self._loaders[task]()
                self._load_counts[task] += 1
        return self._instances[task]


@dataclass
class FieldProvenance:
    predictor: str  # predictor kind or "rule" / "geometry"
    confidence: float


@dataclass
class GeneratedHit:
    hit_index: int  # 1-based ordinal within the rally
    frame_index: int
    label: Optional[ShotLabel] = None
    provenance: dict[str, FieldProvenance] = field(default_factory=dict)
    incomplete_reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "hit_index": self.hit_index,
            "frame_index": self.frame_index,
            "label": self.label.to_dict() if self.label else None,
            "event_token": taxonomy.format_event_token(self.label)
            if self.label
            else None,
            "provenance": {
                k: {"predictor": p.predictor, "confidence": p.confidence}
                for k, p in self.provenance.items()
            },
            "incomplete_reason": self.incomplete_reason,
        }


@dataclass
class GeneratedLabelSet:
    rally_id: str
    hits: list[GeneratedHit] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rally_id": self.rally_id, "hits": [h.to_dict() for h in self.hits]}


_PARTNER = {
    PlayerRole.P1: PlayerRole.P2,
    PlayerRole.P2: PlayerRole.P1,
    PlayerRole.P3: PlayerRole.P4,
    PlayerRole.P4: PlayerRole.P3,
}


def generate_rally_labels(
    video: VideoRecord,
    rally: Rally,
    registry: ModelRegistry,
    aset: Optional[AnnotationSet] = None,
    index: Optional[FrameIndex] = None,
    future_frames: int = DEFAULT_FUTURE_FRAMES,
) -> GeneratedLabelSet:
    """Generate one validated label per hit of an ended rally.

    Per hit: (1) court position from the hitter anchor and net geometry;
    (2) serves get a formation and a T/B/W direction; (3) other shots get a
    shot type (ordinal 2 forced to Return), side and rally direction from
    the legal set; (4) the final hit gets a predicted outcome, earlier hits
    are In. Hits whose predictor inputs are missing are marked incomplete
    and generation continues.
    """
    if not rally.ended:
        raise LabelGenError("rally-open", f"rally {rally.id} has no end frame")
    if video.net is None:
        raise LabelGenError("no-net", f"video {video.id} has no net geometry")

    result = GeneratedLabelSet(rally_id=rally.id)
    n_hits = len(rally.hits)
    for i, hit in enumerate(rally.hits, start=1):
        prov: dict[str, FieldProvenance] = {}
        ctx = PredictionContext(
            video_id=video.id,
            frame_index=hit.frame_index,
            future_frame_index=select_future_frame(
                hit.frame_index, rally.end_frame, future_frames
            ),
            hitter=hit.hitter,
            partner=_PARTNER[hit.hitter],
            aset=aset,
            index=index,
        )
        profile = video.profile(hit.hitter)
        court = courtgeom.court_position(hit.hitter_anchor, video.net, video.orientation)
        prov["court"] = FieldProvenance("geometry", 1.0)
        generated = GeneratedHit(hit_index=i, frame_index=hit.frame_index)
        try:
            if i == 1:
                # Generation cannot see fault context, so ordinal 1 is always
                # a first serve; annotators flag second serves on review.
                shot_type = ShotType.SERVE
                prov["shot_type"] = FieldProvenance("rule", 1.0)
            elif i == 2:
                shot_type = ShotType.RETURN
                prov["shot_type"] = FieldProvenance("rule", 1.0)
            else:
                predictor = registry.get("shot_type")
                shot_type, conf = predictor.predict(
                    "shot_type", list(RALLY_SHOT_TYPES), ctx
                )
                prov["shot_type"] = FieldProvenance(predictor.kind.value, conf)

            predictor = registry.get("side")
            side, conf = predictor.predict("side", list(ShotSide), ctx)
            prov["side"] = FieldProvenance(predictor.kind.value, conf)

            legal_dirs = taxonomy.legal_directions(
                shot_type, profile.handedness, court, side
            )
            predictor = registry.get("direction")
            direction, conf = predictor.predict("direction", list(legal_dirs), ctx)
            prov["direction"] = FieldProvenance(predictor.kind.value, conf)

            legal_forms = taxonomy.legal_formations(shot_type)
            if shot_type.is_serve:
                predictor = registry.get("formation")
                formation, conf = predictor.predict(
                    "formation", list(legal_forms), ctx
                )
                prov["formation"] = FieldProvenance(predictor.kind.value, conf)
            else:
                formation = Formation.NON_SERVE
                prov["formation"] = FieldProvenance("rule", 1.0)

            if i == n_hits:
                predictor = registry.get("outcome")
                outcome, conf = predictor.predict("outcome", list(Outcome), ctx)
                prov["outcome"] = FieldProvenance(predictor.kind.value, conf)
            else:
                outcome = Outcome.IN
                prov["outcome"] = FieldProvenance("rule", 1.0)

            generated.label = ShotLabel(
                court=court,
                side=side,
                shot_type=shot_type,
                direction=direction,
                formation=formation,
                outcome=outcome,
                hitter=hit.hitter,
            )
            generated.provenance = prov
        except LabelGenError as exc:
            if exc.code == "empty-legal-set":
                raise
            generated.incomplete_reason = f"{exc.code}: {exc}"
            log.warning("hit %d of rally %s incomplete: %s", i, rally.id, exc)
        result.hits.append(generated)
    return result
