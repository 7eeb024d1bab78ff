"""Portable checkpoints: config + named weight tensors + run metadata in a zip."""
from __future__ import annotations

import hashlib
import io
import json
import zipfile
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import torch

from ..errors import CheckpointError
from .config import ModelConfig
from .network import TrajectoryForecaster, build_model


def save_checkpoint(path, model: TrajectoryForecaster, metadata: Optional[dict] = None) -> None:
    """Write a checkpoint archive: config.json, weights.npz, meta.json."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    weights = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    buf = io.BytesIO()
    np.savez(buf, **weights)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("config.json", json.dumps(model.config.to_dict(), indent=2, sort_keys=True))
        zf.writestr("weights.npz", buf.getvalue())
        zf.writestr("meta.json", json.dumps(metadata or {}, indent=2, sort_keys=True, default=str))


def load_checkpoint(path) -> Tuple[TrajectoryForecaster, dict]:
    """Load a checkpoint archive; metadata gains a content-derived checkpoint_id."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        raw = path.read_bytes()
        with zipfile.ZipFile(io.BytesIO(raw)) as zf:
            config = ModelConfig.from_dict(json.loads(zf.read("config.json")))
            metadata = json.loads(zf.read("meta.json"))
            npz = np.load(io.BytesIO(zf.read("weights.npz")))
            state = {k: torch.as_tensor(npz[k]) for k in npz.files}
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    model = build_model(config)
    try:
        model.load_state_dict(state)
    except RuntimeError as exc:
        raise CheckpointError(f"checkpoint {path} does not match its config: {exc}") from exc
    model.eval()
    metadata = dict(metadata)
    metadata.setdefault("checkpoint_id", hashlib.sha256(raw).hexdigest()[:12])
    return model, metadata
