"""Command-line interface.

Operates directly on the same data directory the service uses; `serve`
starts the HTTP API. Exit codes: 0 ok, 1 validation failure, 2 usage
error, 3 I/O or storage failure, 4 remote-predictor failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import evalkit
from .api import create_app, run_generation, run_training, TASK_CLASSES
from .ingest import IngestError, apply_player_sidecar, index_frames, parse_coco, serialize_coco
from .labelgen import LabelGenError, ModelRegistry, RandomPredictor
from .posegcn import GcnModel, Variant, gradient_check
from .rallystore import RallyStore, StoreError, validate_rally

EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_REMOTE = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option(
    "--data-dir",
    envvar="DATA_DIR",
    default="./data",
    show_default=True,
    help="Annotation data directory.",
)
@click.pass_context
def main(ctx, data_dir):
    ctx.obj = RallyStore(data_dir)


@main.command()
@click.argument("video_id")
@click.option("--coco", "coco_file", required=True, type=click.Path(exists=True))
@click.option("--players", "players_file", type=click.Path(exists=True))
@click.pass_obj
def ingest(store: RallyStore, video_id, coco_file, players_file):
    """Validate and store detector output for VIDEO_ID."""
    try:
        aset = parse_coco(Path(coco_file).read_text(encoding="utf-8"))
        if players_file:
            sidecar = json.loads(Path(players_file).read_text(encoding="utf-8"))
            apply_player_sidecar(aset, sidecar)
        index = index_frames(aset)
    except IngestError as exc:
        _fail(EXIT_VALIDATION, f"{exc.code}: {exc}")
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    store.save_coco(video_id, serialize_coco(aset))
    click.echo(
        f"ingested {len(aset.images)} frames, {len(aset.annotations)} annotations"
    )
    for cat in aset.categories:
        if cat.role:
            click.echo(f"  {cat.role.value} coverage: {index.coverage(cat.role):.1%}")


@main.command()
@click.argument("video_id")
@click.pass_obj
def validate(store: RallyStore, video_id):
    """Validate every rally of VIDEO_ID; exit 1 if any Error finding."""
    try:
        record = store.load_video(video_id)
    except StoreError as exc:
        _fail(EXIT_IO, f"{exc.code}: {exc}")
    any_errors = False
    for rally in record.rallies:
        report = validate_rally(rally, record)
        for f in report.findings:
            click.echo(f"{rally.id}: {f.severity.value}: {f.code}: {f.message}")
        any_errors = any_errors or not report.valid()
    click.echo("invalid" if any_errors else "ok")
    sys.exit(EXIT_VALIDATION if any_errors else 0)


@main.command()
@click.argument("video_id")
@click.option("--model", default="random", type=click.Choice(["random", "posegcn"]))
@click.option("--seed", default=0, type=int)
@click.pass_obj
def generate(store: RallyStore, video_id, model, seed):
    """Generate shot labels for every ended rally of VIDEO_ID."""
    from .api import create_app  # registry wiring lives with the app

    registry = ModelRegistry()
    if model == "random":
        predictor = RandomPredictor(seed)
        registry.configure_all(lambda task: (lambda: predictor))
    else:
        app = create_app(store.data_dir)
        registry = app.state.registry
    try:
        result = run_generation(store, video_id, registry, None)
    except StoreError as exc:
        _fail(EXIT_IO, f"{exc.code}: {exc}")
    except LabelGenError as exc:
        _fail(
            EXIT_REMOTE if exc.code.startswith("remote") else EXIT_VALIDATION,
            f"{exc.code}: {exc}",
        )
    click.echo(f"generated labels for {result['rallies']} rallies")


@main.group()
def gcn():
    """Pose-graph classifier commands."""


@gcn.command("train")
@click.option(
    "--task",
    required=True,
    type=click.Choice(["side", "shot_type", "direction", "formation", "outcome"]),
)
@click.option("--data", "data_dir", type=click.Path(), default=None)
@click.option("--seed", default=0, type=int)
@click.option("--epochs", default=200, type=int)
@click.option("--lr", default=1e-3, type=float)
@click.pass_obj
def gcn_train(store: RallyStore, task, data_dir, seed, epochs, lr):
    """Train a pose-graph model on confirmed labels in the store."""
    target = RallyStore(data_dir) if data_dir else store
    try:
        result = run_training(
            target,
            target.data_dir / "models",
            task,
            {"seed": seed, "epochs_max": epochs, "learning_rate": lr},
        )
    except LabelGenError as exc:
        _fail(EXIT_VALIDATION, f"{exc.code}: {exc}")
    click.echo(json.dumps(result, indent=2))


@gcn.command("gradcheck")
@click.option("--hidden", default=8, type=int)
@click.option("--epsilon", default=1e-5, type=float)
def gcn_gradcheck(hidden, epsilon):
    """Finite-difference check of the analytic gradients."""
    rng = np.random.default_rng(0)
    worst = 0.0
    for variant in (Variant.SINGLE_POSE, Variant.DOUBLE_POSE):
        model = GcnModel(
            variant=variant,
            class_names=["a", "b", "c"],
            hidden_dims=(hidden,),
            seed=1,
        )
        pose_a = rng.normal(size=(17, 3))
        pose_b = rng.normal(size=(17, 3)) if variant is Variant.DOUBLE_POSE else None
        err = gradient_check(model, pose_a, pose_b, target=1, epsilon=epsilon)
        worst = max(worst, err)
        click.echo(f"{variant.value}: max relative error {err:.3e}")
    if worst >= 1e-5:
        _fail(EXIT_VALIDATION, f"gradient check failed: {worst:.3e} >= 1e-5")
    click.echo("ok")


@main.command("eval")
@click.argument("video_id")
@click.option(
    "--task",
    required=True,
    type=click.Choice(["side", "shot_type", "direction", "formation", "outcome"]),
)
@click.pass_obj
def eval_cmd(store: RallyStore, video_id, task):
    """Score generated labels against confirmed ones for VIDEO_ID."""
    from .api import _load_generated
    from .rallystore import LabelSource

    try:
        record = store.load_video(video_id)
    except StoreError as exc:
        _fail(EXIT_IO, f"{exc.code}: {exc}")
    generated = _load_generated(store, video_id)
    classes = TASK_CLASSES[task]
    truths, predictions = [], []
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
        _fail(EXIT_VALIDATION, "no confirmed/generated label pairs to compare")
    result = evalkit.confusion_and_rates(predictions, truths, len(classes), task)
    click.echo(json.dumps(result.to_dict(), indent=2))


@main.command()
@click.option("--ratio", default=0.7, type=float, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--holdout", "holdouts", multiple=True)
@click.option("--events", "events_file", type=click.Path(exists=True), required=True)
def split(ratio, seed, holdouts, events_file):
    """Split an events JSON file (list of {video_id, ...}) into train/val/test."""
    events = json.loads(Path(events_file).read_text(encoding="utf-8"))
    try:
        plan = evalkit.split_dataset(events, ratio=ratio, seed=seed, holdouts=holdouts)
    except evalkit.EvalError as exc:
        _fail(EXIT_USAGE, str(exc))
    click.echo(json.dumps(plan.to_dict(), indent=2))


@main.command()
@click.option("--port", envvar="PORT", default=8000, type=int, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--remote-predictor-url", envvar="REMOTE_PREDICTOR_URL", default=None)
@click.pass_obj
def serve(store: RallyStore, port, host, remote_predictor_url):
    """Run the HTTP API."""
    import uvicorn

    app = create_app(store.data_dir, remote_predictor_url=remote_predictor_url)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
