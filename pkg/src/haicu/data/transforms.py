"""Scene-level rotation augmentation.

Rotating every trajectory about the scene origin leaves class probabilities,
timesteps and all pairwise distances (hence the interaction graph) unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError
from ..scene import AgentTrack, Scene


@dataclass(frozen=True)
class AugmentationConfig:
    rotation_step: float = 15.0  # degrees
    enabled: bool = True

    def __post_init__(self):
        if self.rotation_step <= 0 or 360.0 % self.rotation_step != 0:
            raise InvalidParameterError(
                f"rotation_step must divide 360, got {self.rotation_step}"
            )

    def angles(self) -> np.ndarray:
        """All rotation angles in degrees: 0, step, ..., 360 - step."""
        return np.arange(0.0, 360.0, self.rotation_step)


def rotation_matrix(gamma_deg: float) -> np.ndarray:
    g = math.radians(gamma_deg)
    c, s = math.cos(g), math.sin(g)
    return np.array([[c, -s], [s, c]])


def rotate_scene(scene: Scene, gamma_deg: float) -> Scene:
    """Rotate all positions, velocities and accelerations by gamma about the origin."""
    rot = rotation_matrix(gamma_deg).T  # right-multiplied onto row vectors
    tracks = []
    for track in scene.tracks:
        states = track.states.copy()
        for lo in (0, 2, 4):
            states[:, lo : lo + 2] = states[:, lo : lo + 2] @ rot
        tracks.append(
            AgentTrack(
                agent_id=track.agent_id,
                timesteps=track.timesteps,
                states=states,
                class_probs=track.class_probs,
                true_class=track.true_class,
            )
        )
    return Scene(scene_id=scene.scene_id, tracks=tracks, class_names=scene.class_names, dt=scene.dt)
