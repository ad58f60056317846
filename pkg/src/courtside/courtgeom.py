"""Court quadrant derivation from the annotated net segment.

Image coordinates: origin top-left, y grows downward, so a player below the
net line in the image is on the near (camera) side. The net is stored as a
segment rather than a horizontal line to tolerate tilted camera angles.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .taxonomy import CourtPosition


class NearDeuceSide(enum.Enum):
    CAMERA_RIGHT = "camera_right"
    CAMERA_LEFT = "camera_left"


@dataclass(frozen=True)
class CameraOrientation:
    """Which half of the image holds the near team's deuce court.

    With a broadcast camera behind the near baseline the near players face
    away, so their deuce (right) court appears camera-right; the far team's
    deuce court is then camera-left. Configurable per video for unusual
    camera placements.
    """

    near_deuce_side: NearDeuceSide = NearDeuceSide.CAMERA_RIGHT


@dataclass(frozen=True)
class AnchorPoint:
    x: float
    y: float


@dataclass(frozen=True)
class NetGeometry:
    left_end: tuple[float, float]
    right_end: tuple[float, float]

    def __post_init__(self):
        if self.left_end[0] >= self.right_end[0]:
            raise ValueError("net left endpoint must be left of right endpoint")

    def center(self) -> tuple[float, float]:
        return (
            (self.left_end[0] + self.right_end[0]) / 2.0,
            (self.left_end[1] + self.right_end[1]) / 2.0,
        )

    def line_y_at(self, x: float) -> float:
        x0, y0 = self.left_end
        x1, y1 = self.right_end
        t = (x - x0) / (x1 - x0)
        return y0 + t * (y1 - y0)

    def to_dict(self) -> dict:
        return {"left": list(self.left_end), "right": list(self.right_end)}

    @classmethod
    def from_dict(cls, d: dict) -> "NetGeometry":
        return cls(left_end=tuple(d["left"]), right_end=tuple(d["right"]))


def anchor_point(bbox: tuple[float, float, float, float]) -> AnchorPoint:
    """Bottom-center of a player box: the foot-position proxy."""
    x, y, w, h = bbox
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate bbox {bbox}")
    return AnchorPoint(x + w / 2.0, y + h)


def is_near_side(p: AnchorPoint, net: NetGeometry) -> bool:
    """True iff the anchor sits below the net line in the image (tie -> near)."""
    return p.y >= net.line_y_at(p.x)


def court_position(
    p: AnchorPoint,
    net: NetGeometry,
    cam: CameraOrientation = CameraOrientation(),
) -> CourtPosition:
    """Quadrant of the court the anchor point occupies.

    Ties break to near and to deuce so that a point exactly on the net
    center resolves deterministically.
    """
    near = is_near_side(p, net)
    cx = net.center()[0]
    deuce_is_right = (cam.near_deuce_side is NearDeuceSide.CAMERA_RIGHT) == near
    deuce = p.x >= cx if deuce_is_right else p.x <= cx
    if near:
        return CourtPosition.NEAR_DEUCE if deuce else CourtPosition.NEAR_ADVANTAGE
    return CourtPosition.FAR_DEUCE if deuce else CourtPosition.FAR_ADVANTAGE
