"""FastAPI service exposing the annotation workflow.

The app wraps a RallyStore data directory. Long-running work (training,
label generation) goes through the job runner and is polled via /jobs/{id};
everything else is synchronous. Error responses carry a stable `code` the
CLI and UI can branch on.
"""

from __future__ import annotations

import dataclasses
import logging
import uuid
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from . import evalkit, labelgen, taxonomy
from .courtgeom import AnchorPoint, CameraOrientation, NearDeuceSide, NetGeometry
from .ingest import IngestError, index_frames, parse_coco, pose_features, serialize_coco
from .jobs import JobKind, JobRunner, QueueFullError
from .labelgen import (
    LabelGenError,
    ModelRegistry,
    PoseGcnPredictor,
    RandomPredictor,
    RemotePredictor,
    TASKS,
)
from .posegcn import GcnModel, Sample, TrainConfig, Variant, load_checkpoint, save_checkpoint, train
from .rallystore import (
    LabelSource,
    RallyStore,
    StoreError,
    VideoRecord,
    VideoSource,
    add_hitting_moment,
    create_rally,
    end_rally,
    set_hit_label,
    validate_rally,
)
from .schemas import (
    GenerateRequest,
    HitCreate,
    LabelUpdate,
    NetUpdate,
    PlayersUpdate,
    RallyCreate,
    RallyUpdate,
    TrainRequest,
    ValidateShotRequest,
    VideoCreate,
)
from .taxonomy import Handedness, PlayerProfile, PlayerRole, ShotLabel

log = logging.getLogger(__name__)

# Which pose-model variant serves each prediction task: formation pairs the
# hitter with the partner, direction/outcome pair the hit frame with the
# future frame, the rest are single-pose.
TASK_VARIANTS = {
    "side": Variant.SINGLE_POSE,
    "shot_type": Variant.SINGLE_POSE,
    "direction": Variant.DOUBLE_POSE,
    "formation": Variant.DOUBLE_POSE,
    "outcome": Variant.DOUBLE_POSE,
}

TASK_CLASSES = {
    "side": [v.value for v in taxonomy.ShotSide],
    "shot_type": [v.value for v in taxonomy.ShotType],
    "direction": [v.value for v in taxonomy.ShotDirection],
    "formation": [v.value for v in taxonomy.Formation],
    "outcome": [v.value for v in taxonomy.Outcome],
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def _label_from_model(m) -> ShotLabel:
    try:
        return ShotLabel.from_dict(m.model_dump())
    except ValueError as exc:
        raise ApiError(422, "bad-label", f"unknown label value: {exc}")


def create_app(
    data_dir: str | Path,
    remote_predictor_url: Optional[str] = None,
    registry: Optional[ModelRegistry] = None,
) -> FastAPI:
    app = FastAPI(title="courtside", version="0.1.0")
    store = RallyStore(data_dir)
    runner = JobRunner()
    gcn_registry = registry or ModelRegistry()
    models_dir = Path(data_dir) / "models"

    def _checkpoint_loader(task: str):
        def load():
            path = models_dir / f"{task}.json"
            if not path.exists():
                raise LabelGenError("no-model", f"no checkpoint for task {task}")
            model, _ = load_checkpoint(path)
            return PoseGcnPredictor(model)

        return load

    gcn_registry.configure_all(_checkpoint_loader)

    app.state.store = store
    app.state.runner = runner
    app.state.registry = gcn_registry
    app.state.remote_predictor_url = remote_predictor_url

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message}
        if exc.detail is not None:
            body["detail"] = exc.detail
        return JSONResponse(status_code=exc.status, content=body)

    def load_video(video_id: str) -> VideoRecord:
        try:
            return store.load_video(video_id)
        except StoreError as exc:
            status = 404 if exc.code == "unknown-video" else 500
            raise ApiError(status, exc.code, str(exc))

    # ---- videos ----------------------------------------------------------

    @app.get("/videos")
    def list_videos():
        out = []
        for vid in store.list_videos():
            record = store.load_video(vid)
            out.append(
                {
                    "id": record.id,
                    "title": record.title,
                    "source": record.source.value,
                    "frame_count": record.frame_count,
                    "rallies": len(record.rallies),
                }
            )
        return out

    @app.post("/videos", status_code=201)
    def post_video(body: VideoCreate):
        video_id = body.id or uuid.uuid4().hex[:12]
        if store.exists(video_id):
            raise ApiError(409, "duplicate-video", f"video {video_id} exists")
        record = VideoRecord(
            id=video_id,
            title=body.title,
            source=VideoSource(body.source),
            frame_count=body.frame_count,
            frame_directory=body.frame_directory,
        )
        store.save_video(record)
        return record.to_dict()

    @app.get("/videos/{video_id}")
    def get_video(video_id: str):
        return load_video(video_id).to_dict()

    # ---- players / net / annotations ------------------------------------

    @app.get("/videos/{video_id}/players")
    def get_players(video_id: str):
        record = load_video(video_id)
        return [
            {
                "role": p.role.value,
                "description": p.description,
                "handedness": p.handedness.value,
            }
            for p in record.players
        ]

    @app.put("/videos/{video_id}/players")
    def put_players(video_id: str, body: PlayersUpdate):
        record = load_video(video_id)
        roles = {p.role for p in body.players}
        if len(roles) != 4:
            raise ApiError(422, "bad-players", "4 distinct roles required")
        record.players = [
            PlayerProfile(
                role=PlayerRole(p.role),
                description=p.description,
                handedness=Handedness(p.handedness),
            )
            for p in body.players
        ]
        store.save_video(record)
        return get_players(video_id)

    @app.get("/videos/{video_id}/net")
    def get_net(video_id: str):
        record = load_video(video_id)
        if record.net is None:
            raise ApiError(404, "no-net", f"video {video_id} has no net geometry")
        return {
            **record.net.to_dict(),
            "near_deuce_side": record.orientation.near_deuce_side.value,
        }

    @app.put("/videos/{video_id}/net")
    def put_net(video_id: str, body: NetUpdate):
        record = load_video(video_id)
        try:
            record.net = NetGeometry(left_end=body.left, right_end=body.right)
        except ValueError as exc:
            raise ApiError(422, "bad-net", str(exc))
        record.orientation = CameraOrientation(NearDeuceSide(body.near_deuce_side))
        store.save_video(record)
        return get_net(video_id)

    @app.get("/videos/{video_id}/annotations")
    def get_annotations(video_id: str):
        load_video(video_id)
        try:
            return store.load_coco(video_id)
        except StoreError as exc:
            raise ApiError(404, exc.code, str(exc))

    @app.put("/videos/{video_id}/annotations")
    def put_annotations(video_id: str, body: dict):
        load_video(video_id)
        try:
            aset = parse_coco(body)
            index_frames(aset)  # surfaces duplicate detections
        except IngestError as exc:
            raise ApiError(422, exc.code, str(exc))
        store.save_coco(video_id, serialize_coco(aset))
        return {
            "images": len(aset.images),
            "categories": len(aset.categories),
            "annotations": len(aset.annotations),
        }

    @app.get("/videos/{video_id}/frames/{index}.jpg")
    def get_frame(video_id: str, index: int):
        record = load_video(video_id)
        for directory in (store.frames_dir(video_id), Path(record.frame_directory or ".")):
            if not directory.is_dir():
                continue
            for candidate in sorted(directory.iterdir()):
                try:
                    if int(candidate.stem) == index:
                        return FileResponse(candidate)
                except ValueError:
                    continue
        raise ApiError(404, "no-frame", f"no frame {index} for video {video_id}")

    # ---- rallies and hits -----------------------------------------------

    @app.get("/videos/{video_id}/rallies")
    def get_rallies(video_id: str):
        return [r.to_dict() for r in load_video(video_id).rallies]

    @app.post("/videos/{video_id}/rallies", status_code=201)
    def post_rally(video_id: str, body: RallyCreate):
        record = load_video(video_id)
        rally_id = body.id or f"rally-{len(record.rallies) + 1:03d}"
        try:
            rally = create_rally(record, rally_id, body.start_frame)
        except StoreError as exc:
            status = 409 if exc.code in ("overlap", "duplicate-rally") else 422
            raise ApiError(status, exc.code, str(exc))
        store.save_video(record)
        return rally.to_dict()

    def _find_rally(record: VideoRecord, rally_id: str):
        try:
            return record.rally(rally_id)
        except StoreError as exc:
            raise ApiError(404, exc.code, str(exc))

    @app.put("/videos/{video_id}/rallies/{rally_id}")
    def put_rally(video_id: str, rally_id: str, body: RallyUpdate):
        record = load_video(video_id)
        rally = _find_rally(record, rally_id)
        try:
            end_rally(record, rally, body.end_frame, body.end_ball_position)
        except StoreError as exc:
            status = 409 if exc.code == "overlap" else 422
            raise ApiError(status, exc.code, str(exc))
        store.save_video(record)
        return rally.to_dict()

    @app.delete("/videos/{video_id}/rallies/{rally_id}")
    def delete_rally(video_id: str, rally_id: str):
        record = load_video(video_id)
        rally = _find_rally(record, rally_id)
        record.rallies.remove(rally)
        store.save_video(record)
        return {"deleted": rally_id}

    @app.post("/videos/{video_id}/rallies/{rally_id}/hits", status_code=201)
    def post_hit(video_id: str, rally_id: str, body: HitCreate):
        record = load_video(video_id)
        rally = _find_rally(record, rally_id)
        try:
            report = add_hitting_moment(
                rally,
                body.frame_index,
                PlayerRole(body.hitter),
                AnchorPoint(*body.anchor),
            )
        except StoreError as exc:
            status = 409 if exc.code == "duplicate-hit" else 422
            raise ApiError(status, exc.code, str(exc))
        store.save_video(record)
        return {"rally": rally.to_dict(), "report": report.to_dict()}

    @app.get("/videos/{video_id}/rallies/{rally_id}/validate")
    def get_rally_validation(video_id: str, rally_id: str):
        record = load_video(video_id)
        rally = _find_rally(record, rally_id)
        return validate_rally(rally, record).to_dict()

    # ---- labels ----------------------------------------------------------

    @app.get("/videos/{video_id}/labels")
    def get_labels(video_id: str):
        record = load_video(video_id)
        out = []
        for rally in record.rallies:
            for i, hit in enumerate(rally.hits, start=1):
                out.append(
                    {
                        "rally_id": rally.id,
                        "hit_index": i,
                        "frame_index": hit.frame_index,
                        "hitter": hit.hitter.value,
                        "label": hit.label.to_dict() if hit.label else None,
                        "event_token": taxonomy.format_event_token(hit.label)
                        if hit.label
                        else None,
                        "label_source": hit.label_source.value,
                    }
                )
        return out

    @app.put("/videos/{video_id}/rallies/{rally_id}/hits/{hit_index}/label")
    def put_hit_label(video_id: str, rally_id: str, hit_index: int, body: LabelUpdate):
        record = load_video(video_id)
        rally = _find_rally(record, rally_id)
        if not 1 <= hit_index <= len(rally.hits):
            raise ApiError(404, "unknown-hit", f"no hit {hit_index} in {rally_id}")
        hit = rally.hits[hit_index - 1]
        label = _label_from_model(body.label)
        if label.hitter is None:
            label = dataclasses.replace(label, hitter=hit.hitter)
        profile = record.profile(hit.hitter)
        report = taxonomy.validate_shot(
            label, profile, hit_index, is_last_shot=(hit_index == len(rally.hits))
        )
        if not report.valid():
            first = report.errors[0]
            raise ApiError(422, first.code, first.message, detail=report.to_dict())
        set_hit_label(hit, label, LabelSource.CONFIRMED)
        store.save_video(record)
        return {
            "label": label.to_dict(),
            "label_source": hit.label_source.value,
            "report": report.to_dict(),
        }

    @app.post("/validate/shot")
    def post_validate_shot(body: ValidateShotRequest):
        label = _label_from_model(body.label)
        profile = PlayerProfile(
            role=PlayerRole(body.profile.role),
            description=body.profile.description,
            handedness=Handedness(body.profile.handedness),
        )
        if label.hitter is None:
            label = dataclasses.replace(label, hitter=profile.role)
        try:
            report = taxonomy.validate_shot(label, profile, body.ordinal, body.is_last)
        except ValueError as exc:
            raise ApiError(422, "bad-request", str(exc))
        legal = taxonomy.legal_directions(
            label.shot_type, profile.handedness, label.court, label.side
        )
        return {
            **report.to_dict(),
            "legal_directions": sorted(d.value for d in legal),
            "legal_formations": sorted(
                f.value for f in taxonomy.legal_formations(label.shot_type)
            ),
        }

    # ---- generation ------------------------------------------------------

    def _build_registry(model: str, seed: Optional[int]) -> ModelRegistry:
        if model == "random":
            registry = ModelRegistry()
            predictor = RandomPredictor(seed if seed is not None else 0)
            registry.configure_all(lambda task: (lambda: predictor))
            return registry
        if model == "posegcn":
            return gcn_registry
        if model == "remote":
            url = app.state.remote_predictor_url
            if not url:
                raise ApiError(422, "no-remote", "no remote predictor configured")
            registry = ModelRegistry()
            predictor = RemotePredictor(url)
            registry.configure_all(lambda task: (lambda: predictor))
            return registry
        raise ApiError(422, "bad-model", f"unknown model {model!r}")

    @app.post("/videos/{video_id}/labels/generate", status_code=202)
    def post_generate(video_id: str, body: GenerateRequest):
        record = load_video(video_id)
        if record.net is None:
            raise ApiError(422, "no-net", "set net geometry before generating")
        if not record.players:
            raise ApiError(422, "no-players", "define player profiles first")
        registry = _build_registry(body.model, body.seed)
        rally_ids = body.rally_ids

        def run(job):
            return run_generation(store, video_id, registry, rally_ids, job)

        try:
            job = runner.submit(JobKind.GENERATE, run)
        except QueueFullError as exc:
            raise ApiError(503, "queue-full", str(exc))
        return job.to_dict()

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = runner.get(job_id)
        if job is None:
            raise ApiError(404, "unknown-job", f"no job {job_id}")
        return job.to_dict()

    # ---- models and training --------------------------------------------

    @app.get("/models")
    def get_models():
        out = []
        for task in TASKS:
            path = models_dir / f"{task}.json"
            out.append(
                {
                    "task": task,
                    "checkpoint": str(path) if path.exists() else None,
                    "load_count": gcn_registry.load_count(task),
                }
            )
        return out

    @app.post("/models/gcn/train", status_code=202)
    def post_train(body: TrainRequest):
        task = body.task
        config = dict(body.config)

        def run(job):
            return run_training(store, models_dir, task, config, job)

        try:
            job = runner.submit(JobKind.TRAIN, run)
        except QueueFullError as exc:
            raise ApiError(503, "queue-full", str(exc))
        return job.to_dict()

    # ---- metrics ---------------------------------------------------------

    @app.get("/videos/{video_id}/metrics")
    def get_metrics(video_id: str, task: str):
        if task not in TASKS:
            raise ApiError(422, "bad-task", f"unknown task {task!r}")
        record = load_video(video_id)
        generated = _load_generated(store, video_id)
        truths, predictions = [], []
        classes = TASK_CLASSES[task]
        for rally in record.rallies:
            gen_hits = generated.get(rally.id, {})
            for i, hit in enumerate(rally.hits, start=1):
                if hit.label is None or hit.label_source is not LabelSource.CONFIRMED:
                    continue
                gen = gen_hits.get(i)
                if not gen or not gen.get("label"):
                    continue
                truths.append(classes.index(hit.label.to_dict()[task]))
                predictions.append(classes.index(gen["label"][task]))
        if not truths:
            raise ApiError(
                404, "no-pairs", "no confirmed/generated label pairs for this task"
            )
        result = evalkit.confusion_and_rates(predictions, truths, len(classes), task)
        return result.to_dict()

    return app


# ---- job bodies ----------------------------------------------------------


def _generated_path(store: RallyStore, video_id: str) -> Path:
    return store.video_dir(video_id) / "generated.json"


def _load_generated(store: RallyStore, video_id: str) -> dict:
    import json

    path = _generated_path(store, video_id)
    if not path.exists():
        return {}
    with path.open(encoding="utf-8") as fh:
        doc = json.load(fh)
    return {
        rally_id: {h["hit_index"]: h for h in entry["hits"]}
        for rally_id, entry in doc.items()
    }


def run_generation(
    store: RallyStore,
    video_id: str,
    registry: ModelRegistry,
    rally_ids: Optional[list[str]],
    job=None,
) -> dict:
    """Generate labels for the selected (default: all ended) rallies.

    Writes the raw generated sets to generated.json and applies labels to
    hits that are not yet confirmed.
    """
    record = store.load_video(video_id)
    aset = index = None
    try:
        aset = parse_coco(store.load_coco(video_id))
        index = index_frames(aset)
    except StoreError:
        pass  # pose-free predictors still work

    rallies = [
        r
        for r in record.rallies
        if r.ended and (rally_ids is None or r.id in rally_ids)
    ]
    results = {}
    for n, rally in enumerate(rallies):
        if job is not None:
            job.set_progress(n / max(len(rallies), 1), f"rally {rally.id}")
        result = labelgen.generate_rally_labels(record, rally, registry, aset, index)
        results[rally.id] = result.to_dict()
        for gen in result.hits:
            if gen.label is None:
                continue
            hit = rally.hits[gen.hit_index - 1]
            if hit.label_source is LabelSource.CONFIRMED and hit.label is not None:
                continue
            hit.label = gen.label
            hit.label_source = LabelSource.GENERATED

    store.save_video(record)
    existing = {}
    path = _generated_path(store, video_id)
    if path.exists():
        import json

        with path.open(encoding="utf-8") as fh:
            existing = json.load(fh)
    existing.update(results)
    RallyStore._atomic_write(path, existing)
    return {"rallies": len(results)}


def build_training_samples(store: RallyStore, task: str) -> tuple[list[Sample], list[str]]:
    """Confirmed labels across all videos -> (samples, class names)."""
    classes = TASK_CLASSES[task]
    variant = TASK_VARIANTS[task]
    samples: list[Sample] = []
    partner = labelgen._PARTNER
    for video_id in store.list_videos():
        record = store.load_video(video_id)
        try:
            aset = parse_coco(store.load_coco(video_id))
            index = index_frames(aset)
        except StoreError:
            continue
        for rally in record.rallies:
            if not rally.ended:
                continue
            for hit in rally.hits:
                if hit.label is None or hit.label_source is not LabelSource.CONFIRMED:
                    continue
                try:
                    pose_a = pose_features(aset, index, hit.frame_index, hit.hitter)
                    pose_b = None
                    if variant is Variant.DOUBLE_POSE:
                        if task == "formation":
                            pose_b = pose_features(
                                aset, index, hit.frame_index, partner[hit.hitter]
                            )
                        else:
                            future = labelgen.select_future_frame(
                                hit.frame_index, rally.end_frame
                            )
                            pose_b = pose_features(aset, index, future, hit.hitter)
                except IngestError:
                    continue
                target = classes.index(hit.label.to_dict()[task])
                samples.append(Sample(pose_a=pose_a, target=target, pose_b=pose_b))
    return samples, classes


def run_training(
    store: RallyStore, models_dir: Path, task: str, config: dict, job=None
) -> dict:
    samples, classes = build_training_samples(store, task)
    if len(samples) < 4:
        raise LabelGenError(
            "insufficient-data", f"only {len(samples)} confirmed samples for {task}"
        )
    seed = int(config.get("seed", 0))
    plan = evalkit.split_dataset(
        [{"video_id": "all", "index": i} for i in range(len(samples))],
        ratio=float(config.get("ratio", 0.7)),
        seed=seed,
    )
    train_set = [samples[e["index"]] for e in plan.train_events]
    val_set = [samples[e["index"]] for e in plan.val_events] or train_set

    model = GcnModel(
        variant=TASK_VARIANTS[task],
        class_names=classes,
        hidden_dims=tuple(config.get("hidden_dims", (64,))),
        seed=seed,
    )
    train_config = TrainConfig(
        learning_rate=float(config.get("learning_rate", 1e-3)),
        epochs_max=int(config.get("epochs_max", 200)),
        batch_size=int(config.get("batch_size", 32)),
        early_stop_patience=int(config.get("patience", 20)),
        seed=seed,
        optimizer=config.get("optimizer", "sgd"),
    )
    history = train(model, train_set, val_set, train_config)
    path = models_dir / f"{task}.json"
    save_checkpoint(model, path, history)
    return {
        "task": task,
        "checkpoint": str(path),
        "epochs": history.epochs,
        "best_epoch": history.best_epoch,
        "val_accuracy": history.val_accuracy[history.best_epoch - 1],
        "samples": len(samples),
    }
