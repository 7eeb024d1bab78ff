"""Scene serialization: one JSON object per line, one scene per object.

Record schema::

    {"scene_id": str, "dt": float, "class_names": [str] * K,
     "agents": [{"agent_id": str, "true_class": int?,
                 "steps": [{"t": int, "px": float, "py": float,
                            "vx": float?, "vy": float?,
                            "ax": float?, "ay": float?,
                            "probs": [float] * K}]}]}

Velocities/accelerations are optional; missing components are finite-differenced
from positions per contiguous segment. Files are UTF-8 with LF line endings.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List

import numpy as np

from ..errors import SceneFormatError, SimplexViolationError
from ..scene import AgentTrack, ClassProbVector, Scene, finite_difference_kinematics


def scene_to_record(scene: Scene) -> dict:
    agents = []
    for track in scene.tracks:
        steps = []
        for i, t in enumerate(track.timesteps):
            s = track.states[i]
            steps.append(
                {
                    "t": int(t),
                    "px": float(s[0]),
                    "py": float(s[1]),
                    "vx": float(s[2]),
                    "vy": float(s[3]),
                    "ax": float(s[4]),
                    "ay": float(s[5]),
                    "probs": [float(p) for p in track.class_probs[i]],
                }
            )
        agent = {"agent_id": track.agent_id, "steps": steps}
        if track.true_class is not None:
            agent["true_class"] = track.true_class
        agents.append(agent)
    return {
        "scene_id": scene.scene_id,
        "dt": scene.dt,
        "class_names": list(scene.class_names),
        "agents": agents,
    }


def record_to_scene(record: dict) -> Scene:
    try:
        scene_id = record["scene_id"]
        dt = float(record["dt"])
        class_names = list(record["class_names"])
        agents = record["agents"]
    except (KeyError, TypeError) as exc:
        raise SceneFormatError(f"scene record missing field: {exc}") from exc
    k = len(class_names)
    tracks = []
    for agent in agents:
        agent_id = agent.get("agent_id", "<missing id>")
        steps = sorted(agent.get("steps", []), key=lambda s: s["t"])
        if not steps:
            raise SceneFormatError(f"scene {scene_id}: agent {agent_id} has no steps")
        timesteps = np.array([int(s["t"]) for s in steps])
        positions = np.array([[float(s["px"]), float(s["py"])] for s in steps])
        probs = np.empty((len(steps), k))
        for i, s in enumerate(steps):
            row = s.get("probs")
            if row is None or len(row) != k:
                raise SceneFormatError(
                    f"scene {scene_id}: agent {agent_id} t={s['t']}: probs must have {k} entries"
                )
            try:
                probs[i] = ClassProbVector(row).probs
            except SimplexViolationError as exc:
                raise SceneFormatError(
                    f"scene {scene_id}: agent {agent_id} t={s['t']}: {exc}"
                ) from exc

        have_vel = all("vx" in s and "vy" in s for s in steps)
        have_acc = all("ax" in s and "ay" in s for s in steps)
        velocities = np.array([[float(s["vx"]), float(s["vy"])] for s in steps]) if have_vel else None
        accelerations = np.array([[float(s["ax"]), float(s["ay"])] for s in steps]) if have_acc else None
        if velocities is None or accelerations is None:
            velocities = np.zeros_like(positions) if velocities is None else velocities
            accelerations = np.zeros_like(positions) if accelerations is None else accelerations
            # Differentiate per contiguous segment so gaps do not leak.
            start = 0
            for i in range(1, len(steps) + 1):
                if i == len(steps) or timesteps[i] != timesteps[i - 1] + 1:
                    seg = slice(start, i)
                    v, a = finite_difference_kinematics(positions[seg], dt)
                    if not have_vel:
                        velocities[seg] = v
                        if not have_acc:
                            accelerations[seg] = a
                    elif not have_acc:
                        _, a2 = finite_difference_kinematics(positions[seg], dt)
                        accelerations[seg] = a2
                    start = i
        states = np.hstack([positions, velocities, accelerations])
        tracks.append(
            AgentTrack(
                agent_id=agent_id,
                timesteps=timesteps,
                states=states,
                class_probs=probs,
                true_class=agent.get("true_class"),
            )
        )
    return Scene(scene_id=scene_id, tracks=tracks, class_names=class_names, dt=dt)


def load_scenes(path) -> List[Scene]:
    """Load scenes from a line-delimited JSON file.

    Raises SceneFormatError with the offending line number and, where known,
    the agent id and timestep.
    """
    path = Path(path)
    scenes = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SceneFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                scenes.append(record_to_scene(record))
            except SceneFormatError as exc:
                raise SceneFormatError(f"{path}:{lineno}: {exc}") from exc
    return scenes


def write_scenes(scenes: Iterable[Scene], path) -> None:
    """Write scenes as line-delimited JSON (UTF-8, LF)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for scene in scenes:
            fh.write(json.dumps(scene_to_record(scene), separators=(",", ":")) + "\n")
