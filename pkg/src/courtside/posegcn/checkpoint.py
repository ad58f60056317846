"""Versioned JSON model checkpoints loadable by the predictor registry."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Optional

from .model import GcnModel, Variant
from .train import History

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(
    model: GcnModel, path: str | Path, history: Optional[History] = None
) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "variant": model.variant.value,
        "class_names": model.class_names,
        "hidden_dims": list(model.hidden_dims),
        "in_dim": model.in_dim,
        "num_nodes": model.num_nodes,
        "seed": model.seed,
        "normalize_input": model.normalize_input,
        "self_loops": model.self_loops,
        "edges": [list(e) for e in model.edges],
        "params": {
            k: {"shape": list(v.shape), "data": v.ravel().tolist()}
            for k, v in model.params.items()
        },
        "history": history.to_dict() if history else None,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> tuple[GcnModel, Optional[dict]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"no checkpoint at {path}")
    try:
        with path.open(encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {doc.get('format_version')!r}"
        )
    import numpy as np

    params = {
        k: np.array(v["data"], dtype=float).reshape(v["shape"])
        for k, v in doc["params"].items()
    }
    model = GcnModel(
        variant=Variant(doc["variant"]),
        class_names=doc["class_names"],
        hidden_dims=tuple(doc["hidden_dims"]),
        in_dim=doc["in_dim"],
        num_nodes=doc["num_nodes"],
        seed=doc["seed"],
        normalize_input=doc["normalize_input"],
        self_loops=doc["self_loops"],
        edges=[tuple(e) for e in doc["edges"]],
        params=params,
    )
    return model, doc.get("history")
