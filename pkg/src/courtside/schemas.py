"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class VideoCreate(BaseModel):
    id: Optional[str] = None
    title: str
    source: Literal["professional", "ncaa", "other"] = "other"
    frame_count: int = Field(gt=0)
    frame_directory: str = ""


class PlayerProfileModel(BaseModel):
    role: Literal["p1", "p2", "p3", "p4"]
    description: str = Field(min_length=1)
    handedness: Literal["left", "right", "unknown"] = "unknown"


class PlayersUpdate(BaseModel):
    players: list[PlayerProfileModel] = Field(min_length=4, max_length=4)


class NetUpdate(BaseModel):
    left: tuple[float, float]
    right: tuple[float, float]
    near_deuce_side: Literal["camera_right", "camera_left"] = "camera_right"


class RallyCreate(BaseModel):
    id: Optional[str] = None
    start_frame: int = Field(ge=0)


class RallyUpdate(BaseModel):
    end_frame: int = Field(gt=0)
    end_ball_position: Optional[tuple[float, float]] = None


class HitCreate(BaseModel):
    frame_index: int = Field(ge=0)
    hitter: Literal["p1", "p2", "p3", "p4"]
    anchor: tuple[float, float]


class ShotLabelModel(BaseModel):
    court: str
    side: str
    shot_type: str
    direction: str
    formation: str
    outcome: str
    hitter: Optional[str] = None


class LabelUpdate(BaseModel):
    label: ShotLabelModel


class ValidateShotRequest(BaseModel):
    label: ShotLabelModel
    profile: PlayerProfileModel
    ordinal: int = Field(ge=1)
    is_last: bool


class GenerateRequest(BaseModel):
    model: Literal["random", "posegcn", "remote"] = "random"
    seed: Optional[int] = None
    rally_ids: Optional[list[str]] = None


class TrainRequest(BaseModel):
    task: Literal["side", "shot_type", "direction", "formation", "outcome"]
    config: dict[str, Any] = Field(default_factory=dict)


class ApiErrorModel(BaseModel):
    code: str
    message: str
    detail: Optional[Any] = None
