"""Rally data model and crash-safe, file-backed persistence.

One JSON document per video under <data_dir>/<video_id>/record.json holds
the profiles, net geometry, rallies and labels. Writes go through a
write-then-rename so the on-disk store always parses back to the last
acknowledged state. Mutations are serialized per video id; different videos
are fully independent.
"""

from __future__ import annotations

import enum
import json
import os
import tempfile
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .courtgeom import AnchorPoint, CameraOrientation, NearDeuceSide, NetGeometry
from .taxonomy import (
    PlayerProfile,
    PlayerRole,
    Handedness,
    ShotLabel,
    ValidationReport,
    validate_shot,
)


class StoreError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class VideoSource(enum.Enum):
    PROFESSIONAL = "professional"
    NCAA = "ncaa"
    OTHER = "other"


class LabelSource(enum.Enum):
    GENERATED = "generated"
    CONFIRMED = "confirmed"


@dataclass
class HittingMoment:
    frame_index: int
    hitter: PlayerRole
    hitter_anchor: AnchorPoint
    label: Optional[ShotLabel] = None
    label_source: LabelSource = LabelSource.GENERATED

    def to_dict(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "hitter": self.hitter.value,
            "hitter_anchor": [self.hitter_anchor.x, self.hitter_anchor.y],
            "label": self.label.to_dict() if self.label else None,
            "label_source": self.label_source.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HittingMoment":
        return cls(
            frame_index=d["frame_index"],
            hitter=PlayerRole(d["hitter"]),
            hitter_anchor=AnchorPoint(*d["hitter_anchor"]),
            label=ShotLabel.from_dict(d["label"]) if d.get("label") else None,
            label_source=LabelSource(d.get("label_source", "generated")),
        )


@dataclass
class Rally:
    id: str
    start_frame: int
    end_frame: Optional[int] = None
    hits: list[HittingMoment] = field(default_factory=list)
    end_ball_position: Optional[tuple[float, float]] = None

    @property
    def ended(self) -> bool:
        return self.end_frame is not None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
            "hits": [h.to_dict() for h in self.hits],
            "end_ball_position": list(self.end_ball_position)
            if self.end_ball_position
            else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Rally":
        return cls(
            id=d["id"],
            start_frame=d["start_frame"],
            end_frame=d.get("end_frame"),
            hits=[HittingMoment.from_dict(h) for h in d.get("hits", [])],
            end_ball_position=tuple(d["end_ball_position"])
            if d.get("end_ball_position")
            else None,
        )


@dataclass
class VideoRecord:
    id: str
    title: str
    source: VideoSource
    frame_count: int
    frame_directory: str
    players: list[PlayerProfile] = field(default_factory=list)
    net: Optional[NetGeometry] = None
    orientation: CameraOrientation = field(default_factory=CameraOrientation)
    rallies: list[Rally] = field(default_factory=list)

    def __post_init__(self):
        if self.frame_count <= 0:
            raise StoreError("bad-frame-count", "frame_count must be positive")
        roles = [p.role for p in self.players]
        if self.players and (
            len(self.players) != 4 or len(set(roles)) != 4
        ):
            raise StoreError(
                "bad-players", "a video needs exactly 4 profiles with distinct roles"
            )

    def profile(self, role: PlayerRole) -> PlayerProfile:
        for p in self.players:
            if p.role is role:
                return p
        raise StoreError("no-profile", f"no profile for {role.value}")

    def rally(self, rally_id: str) -> Rally:
        for r in self.rallies:
            if r.id == rally_id:
                return r
        raise StoreError("unknown-rally", f"no rally {rally_id}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "source": self.source.value,
            "frame_count": self.frame_count,
            "frame_directory": self.frame_directory,
            "players": [
                {
                    "role": p.role.value,
                    "description": p.description,
                    "handedness": p.handedness.value,
                }
                for p in self.players
            ],
            "net": self.net.to_dict() if self.net else None,
            "near_deuce_side": self.orientation.near_deuce_side.value,
            "rallies": [r.to_dict() for r in self.rallies],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VideoRecord":
        return cls(
            id=d["id"],
            title=d["title"],
            source=VideoSource(d["source"]),
            frame_count=d["frame_count"],
            frame_directory=d["frame_directory"],
            players=[
                PlayerProfile(
                    role=PlayerRole(p["role"]),
                    description=p["description"],
                    handedness=Handedness(p["handedness"]),
                )
                for p in d.get("players", [])
            ],
            net=NetGeometry.from_dict(d["net"]) if d.get("net") else None,
            orientation=CameraOrientation(
                NearDeuceSide(d.get("near_deuce_side", "camera_right"))
            ),
            rallies=[Rally.from_dict(r) for r in d.get("rallies", [])],
        )


def create_rally(video: VideoRecord, rally_id: str, start_frame: int) -> Rally:
    if not 0 <= start_frame < video.frame_count:
        raise StoreError("frame-range", f"start frame {start_frame} outside video")
    for other in video.rallies:
        if other.ended and other.start_frame <= start_frame <= other.end_frame:
            raise StoreError("overlap", f"frame {start_frame} inside rally {other.id}")
        if other.id == rally_id:
            raise StoreError("duplicate-rally", f"rally {rally_id} already exists")
    rally = Rally(id=rally_id, start_frame=start_frame)
    video.rallies.append(rally)
    return rally


def end_rally(
    video: VideoRecord,
    rally: Rally,
    end_frame: int,
    ball_position: Optional[tuple[float, float]] = None,
) -> Rally:
    if end_frame <= rally.start_frame:
        raise StoreError("frame-range", "rally end must come after its start")
    if end_frame >= video.frame_count:
        raise StoreError("frame-range", f"end frame {end_frame} outside video")
    for other in video.rallies:
        if other is rally or not other.ended:
            continue
        if rally.start_frame <= other.end_frame and other.start_frame <= end_frame:
            raise StoreError("overlap", f"span overlaps rally {other.id}")
    if any(h.frame_index > end_frame for h in rally.hits):
        raise StoreError("frame-range", "existing hits fall after the new end frame")
    rally.end_frame = end_frame
    rally.end_ball_position = ball_position
    return rally


def add_hitting_moment(
    rally: Rally, frame_index: int, hitter: PlayerRole, anchor: AnchorPoint
) -> ValidationReport:
    """Insert a hit keeping frame order; returns structural findings.

    Consecutive hitters from the same team produce a team-alternation
    Warning rather than a rejection: let-cords and dead-ball touches are
    legitimately annotated out of alternation.
    """
    report = ValidationReport()
    upper = rally.end_frame if rally.ended else None
    if frame_index < rally.start_frame or (upper is not None and frame_index > upper):
        raise StoreError("frame-range", f"frame {frame_index} outside rally span")
    if any(h.frame_index == frame_index for h in rally.hits):
        raise StoreError("duplicate-hit", f"frame {frame_index} already has a hit")
    moment = HittingMoment(frame_index=frame_index, hitter=hitter, hitter_anchor=anchor)
    rally.hits.append(moment)
    rally.hits.sort(key=lambda h: h.frame_index)
    idx = rally.hits.index(moment)
    for neighbor in (rally.hits[idx - 1] if idx > 0 else None,
                     rally.hits[idx + 1] if idx + 1 < len(rally.hits) else None):
        if neighbor is not None and neighbor.hitter.same_team(hitter):
            report.add_warning(
                "team-alternation",
                f"consecutive hits by the same team "
                f"({neighbor.hitter.value}, {hitter.value})",
            )
    return report


def set_hit_label(
    moment: HittingMoment, label: ShotLabel, source: LabelSource
) -> None:
    if (
        moment.label_source is LabelSource.CONFIRMED
        and source is LabelSource.GENERATED
    ):
        raise StoreError(
            "label-source-transition", "confirmed labels cannot revert to generated"
        )
    moment.label = label
    moment.label_source = source


def validate_rally(rally: Rally, video: VideoRecord) -> ValidationReport:
    """Full-report validation of an ended rally: structure plus per-shot rules."""
    report = ValidationReport()
    if not rally.ended:
        report.add_error("rally-open", f"rally {rally.id} has no end frame")
        return report
    last_frame = None
    for h in rally.hits:
        if last_frame is not None and h.frame_index <= last_frame:
            report.add_error("hit-order", "hits not strictly increasing")
        last_frame = h.frame_index
    for prev, cur in zip(rally.hits, rally.hits[1:]):
        if prev.hitter.same_team(cur.hitter):
            report.add_warning(
                "team-alternation",
                f"consecutive hits by the same team at frames "
                f"{prev.frame_index}, {cur.frame_index}",
            )
    n = len(rally.hits)
    for i, h in enumerate(rally.hits, start=1):
        if h.label is None:
            report.add_warning("unlabelled-hit", f"hit {i} has no label")
            continue
        profile = video.profile(h.hitter)
        shot_report = validate_shot(h.label, profile, i, is_last_shot=(i == n))
        report.extend(shot_report)
    return report


class RallyStore:
    """Per-video JSON persistence with atomic replace and per-video locking."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, video_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(video_id, threading.Lock())

    def video_dir(self, video_id: str) -> Path:
        return self.data_dir / video_id

    def record_path(self, video_id: str) -> Path:
        return self.video_dir(video_id) / "record.json"

    def coco_path(self, video_id: str) -> Path:
        return self.video_dir(video_id) / "coco.json"

    def frames_dir(self, video_id: str) -> Path:
        return self.video_dir(video_id) / "frames"

    def list_videos(self) -> list[str]:
        return sorted(
            p.parent.name for p in self.data_dir.glob("*/record.json")
        )

    def exists(self, video_id: str) -> bool:
        return self.record_path(video_id).exists()

    def save_video(self, record: VideoRecord) -> None:
        with self.lock(record.id):
            self._atomic_write(self.record_path(record.id), record.to_dict())

    def load_video(self, video_id: str) -> VideoRecord:
        path = self.record_path(video_id)
        if not path.exists():
            raise StoreError("unknown-video", f"no video {video_id}")
        try:
            with path.open(encoding="utf-8") as fh:
                doc = json.load(fh)
            return VideoRecord.from_dict(doc)
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise StoreError("corrupt-store", f"cannot read {path}: {exc}") from exc

    def save_coco(self, video_id: str, document: dict) -> None:
        with self.lock(video_id):
            self._atomic_write(self.coco_path(video_id), document)

    def load_coco(self, video_id: str) -> dict:
        path = self.coco_path(video_id)
        if not path.exists():
            raise StoreError("no-annotations", f"no annotations for {video_id}")
        try:
            with path.open(encoding="utf-8") as fh:
                return json.load(fh)
        except json.JSONDecodeError as exc:
            raise StoreError("corrupt-store", f"cannot read {path}: {exc}") from exc

    @staticmethod
    def _atomic_write(path: Path, doc: dict) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
