"""Parameter and FLOP accounting for the forecaster."""
from __future__ import annotations

from typing import Optional, Union

from .config import ModelConfig
from .network import TrajectoryForecaster


def count_parameters(model: TrajectoryForecaster) -> int:
    """Number of trainable scalars."""
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def _lstm_step_macs(input_dim: int, hidden: int) -> int:
    return 4 * hidden * (input_dim + hidden)


def _gru_step_macs(input_dim: int, hidden: int) -> int:
    return 3 * hidden * (input_dim + hidden)


def count_flops(
    model_or_config: Union[TrajectoryForecaster, ModelConfig],
    n_nodes: int,
    n_edges: int,
    horizon: Optional[int] = None,
) -> float:
    """Estimated FLOPs for one inference pass over a scene.

    Multiply-accumulates count as 2 FLOPs; neighbor-feature summation counts
    its additions. The future encoder is excluded (inference path only).
    """
    cfg = model_or_config.config if isinstance(model_or_config, TrajectoryForecaster) else model_or_config
    horizon = horizon or cfg.prediction_steps
    seq = cfg.history_steps + 1
    in_dim = cfg.input_dim
    e_dim = cfg.embedding_dim
    z = cfg.latent_modes
    n_heads = cfg.num_classes if cfg.variant == "multi_head" else 1
    ctx = e_dim + z

    per_node_macs = seq * _lstm_step_macs(in_dim, cfg.node_hidden)
    per_node_macs += seq * _lstm_step_macs(in_dim, cfg.edge_hidden)
    per_node_macs += e_dim * z  # prior head
    decoder_macs = ctx * cfg.decoder_hidden  # init projection
    decoder_macs += horizon * (_gru_step_macs(ctx + 2, cfg.decoder_hidden) + cfg.decoder_hidden * 5)
    per_node_macs += z * n_heads * decoder_macs

    aggregation_adds = 2 * n_edges * seq * in_dim
    return 2.0 * n_nodes * per_node_macs + float(aggregation_adds)
