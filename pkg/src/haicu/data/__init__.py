from .io import load_scenes, record_to_scene, scene_to_record, write_scenes
from .splits import DatasetSplit, select, split_scenes
from .stats import (
    DatasetStatistics,
    SwitchReport,
    confusion_and_topk,
    dataset_statistics,
    detect_class_switches,
    majority_vote_smooth,
)
from .synthetic import ClassMotionSpec, GeneratorConfig, PerceptionNoiseModel, generate_synthetic
from .transforms import AugmentationConfig, rotate_scene, rotation_matrix

__all__ = [
    "AugmentationConfig",
    "ClassMotionSpec",
    "DatasetSplit",
    "DatasetStatistics",
    "GeneratorConfig",
    "PerceptionNoiseModel",
    "SwitchReport",
    "confusion_and_topk",
    "dataset_statistics",
    "detect_class_switches",
    "generate_synthetic",
    "load_scenes",
    "majority_vote_smooth",
    "record_to_scene",
    "rotate_scene",
    "rotation_matrix",
    "scene_to_record",
    "select",
    "split_scenes",
    "write_scenes",
]
