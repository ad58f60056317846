import time

import pytest
from fastapi.testclient import TestClient

from conftest import make_coco_doc
from courtside.api import create_app


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "data")
    with TestClient(app) as c:
        yield c


PLAYERS = {
    "players": [
        {"role": "p1", "description": "red shirt", "handedness": "right"},
        {"role": "p2", "description": "blue shirt", "handedness": "right"},
        {"role": "p3", "description": "white cap", "handedness": "right"},
        {"role": "p4", "description": "green shorts", "handedness": "right"},
    ]
}

NET = {"left": [100, 300], "right": [1180, 320], "near_deuce_side": "camera_right"}


def make_ready_video(client, video_id="v1", frame_count=1000):
    r = client.post("/videos", json={"id": video_id, "title": "match", "frame_count": frame_count})
    assert r.status_code == 201, r.text
    assert client.put(f"/videos/{video_id}/players", json=PLAYERS).status_code == 200
    assert client.put(f"/videos/{video_id}/net", json=NET).status_code == 200
    return video_id


def add_rally(client, video_id, rally_id, start, end, hits):
    r = client.post(f"/videos/{video_id}/rallies", json={"id": rally_id, "start_frame": start})
    assert r.status_code == 201, r.text
    for frame, hitter, anchor in hits:
        r = client.post(
            f"/videos/{video_id}/rallies/{rally_id}/hits",
            json={"frame_index": frame, "hitter": hitter, "anchor": anchor},
        )
        assert r.status_code == 201, r.text
    r = client.put(f"/videos/{video_id}/rallies/{rally_id}", json={"end_frame": end})
    assert r.status_code == 200, r.text


def wait_job(client, job, timeout=60):
    deadline = time.time() + timeout
    while time.time() < deadline:
        doc = client.get(f"/jobs/{job['job_id']}").json()
        if doc["state"] in ("succeeded", "failed"):
            return doc
        time.sleep(0.02)
    raise AssertionError("job did not finish in time")


SERVE = {
    "court": "near_ad", "side": "forehand", "shot_type": "serve",
    "direction": "t", "formation": "i-formation", "outcome": "in",
}
RETURN = {
    "court": "far_deuce", "side": "forehand", "shot_type": "return",
    "direction": "cc", "formation": "non-serve", "outcome": "in",
}
VOLLEY_WIN = {
    "court": "near_deuce", "side": "forehand", "shot_type": "volley",
    "direction": "cc", "formation": "non-serve", "outcome": "win",
}


class TestVideoCrud:
    def test_create_and_list(self, client):
        make_ready_video(client)
        listing = client.get("/videos").json()
        assert [v["id"] for v in listing] == ["v1"]
        assert client.get("/videos/v1").status_code == 200

    def test_duplicate_video(self, client):
        make_ready_video(client)
        r = client.post("/videos", json={"id": "v1", "title": "x", "frame_count": 10})
        assert r.status_code == 409
        assert r.json()["code"] == "duplicate-video"

    def test_unknown_video_404(self, client):
        r = client.get("/videos/none")
        assert r.status_code == 404
        assert r.json()["code"] == "unknown-video"

    def test_net_404_until_set(self, client):
        client.post("/videos", json={"id": "v1", "title": "x", "frame_count": 10})
        assert client.get("/videos/v1/net").status_code == 404
        client.put("/videos/v1/net", json=NET)
        got = client.get("/videos/v1/net").json()
        assert got["near_deuce_side"] == "camera_right"

    def test_bad_net_rejected(self, client):
        client.post("/videos", json={"id": "v1", "title": "x", "frame_count": 10})
        bad = {"left": [500, 300], "right": [100, 300]}
        r = client.put("/videos/v1/net", json=bad)
        assert r.status_code == 422
        assert r.json()["code"] == "bad-net"

    def test_players_must_be_distinct(self, client):
        client.post("/videos", json={"id": "v1", "title": "x", "frame_count": 10})
        body = {"players": [PLAYERS["players"][0]] * 4}
        r = client.put("/videos/v1/players", json=body)
        assert r.status_code == 422
        assert r.json()["code"] == "bad-players"


class TestAnnotations:
    def test_round_trip(self, client):
        make_ready_video(client)
        doc = make_coco_doc([0, 1, 2])
        r = client.put("/videos/v1/annotations", json=doc)
        assert r.status_code == 200
        assert r.json() == {"images": 3, "categories": 4, "annotations": 12}
        stored = client.get("/videos/v1/annotations").json()
        assert len(stored["images"]) == 3

    def test_bad_document_code_surfaces(self, client):
        make_ready_video(client)
        doc = make_coco_doc([0])
        doc["annotations"][0]["image_id"] = 42
        r = client.put("/videos/v1/annotations", json=doc)
        assert r.status_code == 422
        assert r.json()["code"] == "dangling-reference"


class TestRallies:
    def test_two_rallies_five_hits(self, client):
        vid = make_ready_video(client)
        add_rally(client, vid, "r1", 100, 400, [
            (120, "p1", [640, 600]),
            (180, "p3", [400, 150]),
            (240, "p2", [900, 620]),
        ])
        add_rally(client, vid, "r2", 500, 700, [
            (520, "p3", [400, 150]),
            (580, "p1", [640, 600]),
        ])
        rallies = client.get(f"/videos/{vid}/rallies").json()
        assert [len(r["hits"]) for r in rallies] == [3, 2]

    def test_overlap_409(self, client):
        vid = make_ready_video(client)
        add_rally(client, vid, "r1", 100, 400, [])
        r = client.post(f"/videos/{vid}/rallies", json={"id": "r2", "start_frame": 250})
        assert r.status_code == 409
        assert r.json()["code"] == "overlap"

    def test_duplicate_hit_409(self, client):
        vid = make_ready_video(client)
        add_rally(client, vid, "r1", 100, 400, [(120, "p1", [640, 600])])
        r = client.post(
            f"/videos/{vid}/rallies/r1/hits",
            json={"frame_index": 120, "hitter": "p3", "anchor": [400, 150]},
        )
        assert r.status_code == 409
        assert r.json()["code"] == "duplicate-hit"

    def test_delete(self, client):
        vid = make_ready_video(client)
        add_rally(client, vid, "r1", 100, 400, [])
        assert client.delete(f"/videos/{vid}/rallies/r1").status_code == 200
        assert client.get(f"/videos/{vid}/rallies").json() == []


class TestLabels:
    def setup_rally(self, client):
        vid = make_ready_video(client)
        add_rally(client, vid, "r1", 100, 400, [
            (120, "p1", [640, 600]),
            (180, "p3", [400, 150]),
        ])
        return vid

    def test_confirm_label(self, client):
        vid = self.setup_rally(client)
        r = client.put(
            f"/videos/{vid}/rallies/r1/hits/1/label", json={"label": SERVE}
        )
        assert r.status_code == 200, r.text
        assert r.json()["label_source"] == "confirmed"
        labels = client.get(f"/videos/{vid}/labels").json()
        assert labels[0]["event_token"] == "near_ad_forehand_serve_t_i-formation_in"

    def test_illegal_label_422_with_code(self, client):
        vid = self.setup_rally(client)
        bad = dict(SERVE, direction="cc")  # serves cannot go cross-court
        r = client.put(f"/videos/{vid}/rallies/r1/hits/1/label", json={"label": bad})
        assert r.status_code == 422
        assert r.json()["code"] == "serve-direction"

    def test_second_shot_must_return(self, client):
        vid = self.setup_rally(client)
        bad = dict(RETURN, shot_type="volley")
        r = client.put(f"/videos/{vid}/rallies/r1/hits/2/label", json={"label": bad})
        assert r.status_code == 422
        assert r.json()["code"] == "second-shot-return"

    def test_validate_shot_endpoint(self, client):
        body = {
            "label": dict(RETURN, court="near_deuce"),
            "profile": {"role": "p1", "description": "x", "handedness": "right"},
            "ordinal": 2,
            "is_last": False,
        }
        got = client.post("/validate/shot", json=body).json()
        assert got["legal_directions"] == ["cc", "dl"]
        assert got["legal_formations"] == ["non-serve"]

    def test_rally_validation_route(self, client):
        vid = self.setup_rally(client)
        client.put(f"/videos/{vid}/rallies/r1/hits/1/label", json={"label": SERVE})
        report = client.get(f"/videos/{vid}/rallies/r1/validate").json()
        codes = [f["code"] for f in report["findings"]]
        assert "unlabelled-hit" in codes


class TestGeneration:
    def test_generate_then_metrics(self, client):
        vid = make_ready_video(client)
        add_rally(client, vid, "r1", 100, 400, [
            (120, "p1", [640, 600]),
            (180, "p3", [400, 150]),
            (240, "p2", [900, 620]),
        ])
        client.put("/videos/v1/annotations", json=make_coco_doc([120, 180, 240]))
        # confirm one truth label before generating
        r = client.put(f"/videos/{vid}/rallies/r1/hits/1/label", json={"label": SERVE})
        assert r.status_code == 200

        job = client.post(
            f"/videos/{vid}/labels/generate", json={"model": "random", "seed": 3}
        )
        assert job.status_code == 202
        done = wait_job(client, job.json())
        assert done["state"] == "succeeded", done

        labels = client.get(f"/videos/{vid}/labels").json()
        assert labels[0]["label_source"] == "confirmed"  # not clobbered
        assert all(l["label"] is not None for l in labels)
        assert labels[1]["label_source"] == "generated"

        metrics = client.get(f"/videos/{vid}/metrics", params={"task": "shot_type"})
        assert metrics.status_code == 200
        assert metrics.json()["accuracy"] == 1.0  # hit 1 is forced to serve

    def test_generate_requires_net(self, client):
        client.post("/videos", json={"id": "v1", "title": "x", "frame_count": 10})
        client.put("/videos/v1/players", json=PLAYERS)
        r = client.post("/videos/v1/labels/generate", json={"model": "random"})
        assert r.status_code == 422
        assert r.json()["code"] == "no-net"

    def test_metrics_without_pairs_404(self, client):
        vid = make_ready_video(client)
        r = client.get(f"/videos/{vid}/metrics", params={"task": "side"})
        assert r.status_code == 404
        assert r.json()["code"] == "no-pairs"

    def test_unknown_job(self, client):
        assert client.get("/jobs/zzz").status_code == 404


class TestTraining:
    def test_train_side_model_end_to_end(self, client):
        vid = make_ready_video(client)
        add_rally(client, vid, "r1", 100, 400, [
            (120, "p1", [640, 600]),
            (180, "p3", [400, 150]),
            (240, "p2", [900, 620]),
            (300, "p4", [300, 140]),
        ])
        client.put("/videos/v1/annotations", json=make_coco_doc([120, 180, 240, 300]))
        swing = {
            "court": "near_deuce", "side": "forehand", "shot_type": "swing",
            "direction": "cc", "formation": "non-serve", "outcome": "in",
        }
        last = {
            "court": "far_ad", "side": "backhand", "shot_type": "swing",
            "direction": "cc", "formation": "non-serve", "outcome": "win",
        }
        for i, label in enumerate([SERVE, RETURN, swing, last], start=1):
            r = client.put(
                f"/videos/{vid}/rallies/r1/hits/{i}/label", json={"label": label}
            )
            assert r.status_code == 200, r.text

        body = {"task": "side", "config": {"epochs_max": 3, "hidden_dims": [4], "seed": 1}}
        job = client.post("/models/gcn/train", json=body)
        assert job.status_code == 202
        done = wait_job(client, job.json())
        assert done["state"] == "succeeded", done

        models = {m["task"]: m for m in client.get("/models").json()}
        assert models["side"]["checkpoint"] is not None

    def test_models_listing_empty(self, client):
        models = client.get("/models").json()
        assert {m["task"] for m in models} == {
            "side", "shot_type", "direction", "formation", "outcome"
        }
        assert all(m["checkpoint"] is None for m in models)
