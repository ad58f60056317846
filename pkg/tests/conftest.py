import json

import pytest

from courtside.courtgeom import AnchorPoint, NetGeometry
from courtside.rallystore import (
    RallyStore,
    VideoRecord,
    VideoSource,
    add_hitting_moment,
    create_rally,
    end_rally,
)
from courtside.taxonomy import Handedness, PlayerProfile, PlayerRole


def make_profiles(handedness=Handedness.RIGHT):
    return [
        PlayerProfile(PlayerRole.P1, "red shirt near left", handedness),
        PlayerProfile(PlayerRole.P2, "blue shirt near right", handedness),
        PlayerProfile(PlayerRole.P3, "white cap far left", handedness),
        PlayerProfile(PlayerRole.P4, "green shorts far right", handedness),
    ]


def make_video(video_id="vid1", frame_count=1000, handedness=Handedness.RIGHT):
    return VideoRecord(
        id=video_id,
        title="test video",
        source=VideoSource.OTHER,
        frame_count=frame_count,
        frame_directory="frames",
        players=make_profiles(handedness),
        net=NetGeometry(left_end=(100, 300), right_end=(1180, 320)),
    )


def make_rally(video, rally_id="r1", start=100, end=551, hit_frames=None, hitters=None):
    rally = create_rally(video, rally_id, start)
    rally.end_frame = end  # set directly; end_rally checks overlaps separately
    hit_frames = hit_frames if hit_frames is not None else [120, 180, 240]
    hitters = hitters or [PlayerRole.P1, PlayerRole.P3, PlayerRole.P2]
    for frame, hitter in zip(hit_frames, hitters):
        y = 600 if hitter.is_near_team else 150
        add_hitting_moment(rally, frame, hitter, AnchorPoint(640 + frame % 7, y))
    return rally


def make_coco_doc(frames, roles=("p1", "p2", "p3", "p4"), width=1280, height=720):
    """Synthetic COCO document with plausible poses for every role/frame."""
    images = [
        {"id": f, "file_name": f"{f:06d}.jpg", "width": width, "height": height,
         "frame_index": f}
        for f in frames
    ]
    categories = [
        {"id": i + 1, "name": f"player {r}", "role": r, "handedness": "right"}
        for i, r in enumerate(roles)
    ]
    annotations = []
    ann_id = 1
    for f in frames:
        for i, r in enumerate(roles):
            cx, cy = 200 + 250 * i, 500 if r in ("p1", "p2") else 180
            keypoints = []
            for k in range(17):
                keypoints += [cx + 3 * k + (f % 5), cy + 2 * k, 0.9]
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": f,
                    "category_id": i + 1,
                    "bbox": [cx - 40, cy - 90, 80, 180],
                    "keypoints": keypoints,
                    "score": 0.95,
                }
            )
            ann_id += 1
    return {"images": images, "categories": categories, "annotations": annotations}


@pytest.fixture
def store(tmp_path):
    return RallyStore(tmp_path / "data")


@pytest.fixture
def video():
    return make_video()
