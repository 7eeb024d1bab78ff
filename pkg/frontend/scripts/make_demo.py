#!/usr/bin/env python3
"""Build the demo checkpoint + scene file the UI integration test serves.

Trains a small full-probability model on an uncertainty-heavy synthetic set so
that uniform-override counterfactuals visibly widen the predicted ellipses.
Output: frontend/demo/model.ckpt and frontend/demo/scenes.jsonl.
"""
import sys
from pathlib import Path

import numpy as np
import torch

from haicu.data import (
    ClassMotionSpec,
    GeneratorConfig,
    PerceptionNoiseModel,
    generate_synthetic,
    select,
    split_scenes,
    write_scenes,
)
from haicu.model import ModelConfig, build_model, save_checkpoint
from haicu.training import BetaSchedule, TrainingConfig, train

OUT_DIR = Path(__file__).resolve().parent.parent / "demo"


def main() -> int:
    torch.set_num_threads(1)
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else OUT_DIR
    out_dir.mkdir(parents=True, exist_ok=True)

    specs = (
        ClassMotionSpec("car", (3.0, 8.0), heading_noise_std=0.015, speed_jitter=0.03,
                        stop_prob=0.55, move_start_range=(10, 34), accel=4.0),
        ClassMotionSpec("bicycle", (1.2, 4.0), heading_noise_std=0.10, speed_jitter=0.05,
                        stop_prob=0.5, move_start_range=(10, 34), accel=2.0),
        ClassMotionSpec("pedestrian", (0.4, 1.8), heading_noise_std=0.30, speed_jitter=0.08,
                        stop_prob=0.45, move_start_range=(10, 34), accel=1.0),
    )
    config = GeneratorConfig(
        class_specs=specs,
        class_weights=(0.45, 0.25, 0.30),
        n_scenes=120,
        agents_per_scene=(4, 6),
        scene_length=44,
        area=18.0,
    )
    noise = PerceptionNoiseModel(
        confusion=np.array([[0.86, 0.08, 0.06], [0.07, 0.86, 0.07], [0.06, 0.08, 0.86]]),
        emission=np.array([[0.45, 0.32, 0.23], [0.26, 0.45, 0.29], [0.23, 0.32, 0.45]]),
        concentration=18.0,
        switch_rate=0.03,
    )
    scenes = generate_synthetic(config, noise, seed=42)
    split = split_scenes(scenes, seed=0)

    model_cfg = ModelConfig(
        num_classes=3,
        history_steps=8,
        prediction_steps=12,
        node_hidden=24,
        edge_hidden=8,
        future_hidden=16,
        decoder_hidden=64,
        latent_modes=8,
        edge_distance=10.0,
    )
    training = TrainingConfig(
        learning_rate=1e-3,
        batch_size=256,
        max_epochs=30,
        patience=8,
        seed=0,
        beta=BetaSchedule(start=0.01, end=1.0, midpoint=None, steepness=0.015),
        anchor_stride=2,
    )
    model = build_model(model_cfg, seed=0)
    result = train(model, scenes, split, training,
                   log_fn=lambda e: print(f"epoch {e['epoch']}: val_anll {e['val_anll']:.3f}", flush=True))
    save_checkpoint(out_dir / "model.ckpt", result.model,
                    metadata={"seed": 0, "best_epoch": result.best_epoch, "purpose": "ui demo"})
    write_scenes(select(scenes, split.test), out_dir / "scenes.jsonl")
    print(f"demo checkpoint -> {out_dir / 'model.ckpt'} (best val ANLL {result.best_val_anll:.3f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
