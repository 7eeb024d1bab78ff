from .batching import Instance, ObservationBatch, build_batch, enumerate_instances, scene_batch
from .checkpoint import load_checkpoint, save_checkpoint
from .complexity import count_flops, count_parameters
from .config import ModelConfig
from .distribution import TrajectoryDistribution, distributions_from_tensors, gaussian_log_pdf, predict
from .dynamics import integrate_single_integrator, pose_from_state, unicycle_integrate
from .network import MaskedLSTM, TrajectoryForecaster, bivariate_log_pdf, build_model

__all__ = [
    "Instance",
    "MaskedLSTM",
    "ModelConfig",
    "ObservationBatch",
    "TrajectoryDistribution",
    "TrajectoryForecaster",
    "bivariate_log_pdf",
    "build_batch",
    "build_model",
    "count_flops",
    "count_parameters",
    "distributions_from_tensors",
    "enumerate_instances",
    "gaussian_log_pdf",
    "integrate_single_integrator",
    "load_checkpoint",
    "pose_from_state",
    "predict",
    "save_checkpoint",
    "scene_batch",
    "unicycle_integrate",
]
