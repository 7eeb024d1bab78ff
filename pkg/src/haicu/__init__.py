"""Heterogeneous-agent trajectory forecasting conditioned on full class-probability vectors."""

from . import counterfactual, data, metrics, model, training
from .errors import HaicuError
from .scene import (
    AgentState,
    AgentTrack,
    ClassProbVector,
    Scene,
    SceneGraph,
    build_scene_graph,
    class_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "AgentTrack",
    "ClassProbVector",
    "HaicuError",
    "Scene",
    "SceneGraph",
    "build_scene_graph",
    "class_entropy",
    "counterfactual",
    "data",
    "metrics",
    "model",
    "training",
]
