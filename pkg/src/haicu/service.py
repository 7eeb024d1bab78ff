"""HTTP facade over prediction and counterfactual probing.

All responses are pure functions of (checkpoint, scene, request); entropy
estimates are seeded so repeating a request returns an identical payload.
Units: positions/means in meters, covariances in m^2, entropies in nats.
"""
from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .counterfactual import CounterfactualSpec, apply_counterfactual, probe_smoothness
from .data.io import scene_to_record
from .errors import HaicuError, InvalidParameterError
from .model.batching import ObservationBatch, scene_batch
from .model.distribution import TrajectoryDistribution, predict
from .model.network import TrajectoryForecaster
from .scene import Scene

MAX_HORIZON_STEPS = 1000

UNITS = {
    "means": "m",
    "covariances": "m^2",
    "most_likely": "m",
    "mixture_entropy": "nats",
    "mode_weights": "probability",
}


class PredictRequest(BaseModel):
    scene_id: str
    timestep: int
    horizon_s: float = Field(gt=0.0)
    agent_ids: Optional[List[str]] = None
    n_samples: Optional[int] = Field(default=None, ge=1)
    seed: int = 0


class WhatIfRequest(BaseModel):
    scene_id: str
    timestep: int
    horizon_s: float = Field(gt=0.0)
    spec: dict
    agent_ids: Optional[List[str]] = None
    seed: int = 0


class SweepRequest(BaseModel):
    scene_id: str
    timestep: int
    horizon_s: float = Field(gt=0.0)
    agent_id: str
    target_probs: List[float]
    n_lambdas: int = Field(default=11, ge=1)
    seed: int = 0


def _agent_block(agent_id: str, dist: TrajectoryDistribution, entropy_seed: int) -> dict:
    return {
        "agent_id": agent_id,
        "mode_weights": dist.weights.tolist(),
        "means": dist.means.tolist(),
        "covariances": dist.covs.tolist(),
        "most_likely": dist.most_likely_trajectory().tolist(),
        "mixture_entropy": dist.entropy_estimate(seed=entropy_seed),
    }


def create_app(
    model: TrajectoryForecaster,
    scenes: Union[Sequence[Scene], Dict[str, Scene]],
    checkpoint_id: str = "unregistered",
) -> FastAPI:
    """Build the service around one loaded model and an immutable scene set."""
    scene_map: Dict[str, Scene] = (
        dict(scenes) if isinstance(scenes, dict) else {s.scene_id: s for s in scenes}
    )
    app = FastAPI(title="trajectory forecasting service")

    def get_scene(scene_id: str) -> Scene:
        scene = scene_map.get(scene_id)
        if scene is None:
            raise HTTPException(status_code=404, detail=f"unknown scene {scene_id!r}")
        if scene.num_classes != model.config.num_classes:
            raise HTTPException(
                status_code=422,
                detail=(
                    f"scene has K={scene.num_classes} classes but the checkpoint expects "
                    f"K={model.config.num_classes}"
                ),
            )
        return scene

    def make_batch(scene: Scene, timestep: int, agent_ids, horizon_s: float):
        steps = int(round(horizon_s / scene.dt))
        if steps < 1 or steps > MAX_HORIZON_STEPS:
            raise HTTPException(
                status_code=422,
                detail=f"horizon of {steps} steps outside [1, {MAX_HORIZON_STEPS}]",
            )
        try:
            batch = scene_batch(scene, timestep, model.config, agent_ids=agent_ids)
        except HaicuError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return batch, steps

    def prediction_payload(batch: ObservationBatch, steps: int, seed: int, n_samples=None) -> dict:
        dists = predict(model, batch, horizon=steps)
        agents = [
            _agent_block(agent_id, dist, entropy_seed=seed)
            for agent_id, dist in zip(batch.agent_ids, dists)
        ]
        payload = {"agents": agents}
        if n_samples:
            samples = model.sample(batch, n_samples, horizon=steps, seed=seed)
            for i, block in enumerate(payload["agents"]):
                block["samples"] = samples[i].tolist()
        return payload

    @app.get("/health")
    def health():
        return {"status": "ok", "checkpoint_id": checkpoint_id}

    @app.get("/scenes")
    def list_scenes():
        out = []
        for scene in scene_map.values():
            ts = scene.timesteps()
            out.append(
                {
                    "scene_id": scene.scene_id,
                    "n_agents": len(scene.tracks),
                    "first_timestep": int(ts[0]) if ts.size else None,
                    "last_timestep": int(ts[-1]) if ts.size else None,
                    "class_names": scene.class_names,
                    "dt": scene.dt,
                }
            )
        return out

    @app.get("/scenes/{scene_id}")
    def get_scene_record(scene_id: str):
        scene = scene_map.get(scene_id)
        if scene is None:
            raise HTTPException(status_code=404, detail=f"unknown scene {scene_id!r}")
        return scene_to_record(scene)

    @app.post("/predict")
    def predict_endpoint(req: PredictRequest):
        scene = get_scene(req.scene_id)
        batch, steps = make_batch(scene, req.timestep, req.agent_ids, req.horizon_s)
        payload = prediction_payload(batch, steps, req.seed, req.n_samples)
        payload.update(
            {
                "scene_id": req.scene_id,
                "timestep": req.timestep,
                "horizon_steps": steps,
                "dt": scene.dt,
                "units": UNITS,
            }
        )
        return payload

    @app.post("/whatif")
    def whatif_endpoint(req: WhatIfRequest):
        scene = get_scene(req.scene_id)
        batch, steps = make_batch(scene, req.timestep, req.agent_ids, req.horizon_s)
        try:
            spec = CounterfactualSpec.from_dict(req.spec)
            overridden = apply_counterfactual(batch, spec)
        except HaicuError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            "scene_id": req.scene_id,
            "timestep": req.timestep,
            "horizon_steps": steps,
            "dt": scene.dt,
            "units": UNITS,
            "baseline": prediction_payload(batch, steps, req.seed),
            "counterfactual": prediction_payload(overridden, steps, req.seed),
        }

    @app.post("/whatif/sweep")
    def sweep_endpoint(req: SweepRequest):
        scene = get_scene(req.scene_id)
        batch, steps = make_batch(scene, req.timestep, None, req.horizon_s)
        lambdas = np.linspace(0.0, 1.0, req.n_lambdas)
        try:
            curve = probe_smoothness(
                model,
                batch,
                req.agent_id,
                req.target_probs,
                lambdas,
                horizon=steps,
                entropy_seed=req.seed,
            )
        except HaicuError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        out = curve.to_dict()
        out.update(
            {
                "scene_id": req.scene_id,
                "timestep": req.timestep,
                "agent_id": req.agent_id,
                "horizon_steps": steps,
                "units": {"divergence": "m + total variation", "uncertainty": "nats"},
            }
        )
        return out

    return app
