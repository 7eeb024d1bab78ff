"""Model hyperparameters and variant selection."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Tuple

from ..errors import InvalidParameterError

VARIANTS = ("full_probs", "one_hot", "multi_head")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and problem-size parameters.

    Defaults follow the reference sizing: 6 state dims, 20-step history and
    horizon at 0.1 s/step, LSTM encoders of 32 (node) / 8 (edge) units, a
    bidirectional 32-unit future encoder, a 128-unit GRU decoder, and 25
    discrete latent modes.
    """

    num_classes: int
    state_dim: int = 6
    history_steps: int = 20  # H; the encoder sees H+1 steps including "now"
    prediction_steps: int = 20  # T
    node_hidden: int = 32
    edge_hidden: int = 8
    future_hidden: int = 32  # per direction; the future encoder is bidirectional
    decoder_hidden: int = 128
    latent_modes: int = 25
    head_hidden: int = 32  # hidden width of the latent prior/posterior heads; 0 = linear
    variant: str = "full_probs"
    dt: float = 0.1
    edge_distance: float = 10.0  # meters; interaction radius
    edge_window_union: bool = True  # neighbors pooled over the history window
    vehicle_classes: Tuple[int, ...] = ()  # multi_head heads using unicycle dynamics
    cov_floor: float = 1e-8  # m^2, added to predicted position covariances
    # Encoder-side feature scaling (positions are first made agent-relative):
    # meters, m/s, m/s^2 per unit input. Keeps kinematic features and class
    # probabilities on comparable scales.
    input_scales: Tuple[float, float, float] = (10.0, 5.0, 2.5)

    def __post_init__(self):
        if self.num_classes < 1:
            raise InvalidParameterError(f"num_classes must be >= 1, got {self.num_classes}")
        for name in (
            "state_dim",
            "node_hidden",
            "edge_hidden",
            "future_hidden",
            "decoder_hidden",
        ):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be positive")
        if self.history_steps < 1 or self.prediction_steps < 1:
            raise InvalidParameterError("history_steps and prediction_steps must be >= 1")
        if self.latent_modes < 1:
            raise InvalidParameterError("latent_modes must be >= 1")
        if self.head_hidden < 0:
            raise InvalidParameterError("head_hidden must be >= 0")
        if self.variant not in VARIANTS:
            raise InvalidParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.dt <= 0 or self.edge_distance <= 0:
            raise InvalidParameterError("dt and edge_distance must be positive")
        if any(not 0 <= c < self.num_classes for c in self.vehicle_classes):
            raise InvalidParameterError("vehicle_classes must be valid class indices")
        if len(self.input_scales) != 3 or any(s <= 0 for s in self.input_scales):
            raise InvalidParameterError("input_scales must be three positive values")

    @property
    def input_dim(self) -> int:
        """Per-step encoder input width: state concatenated with class probs
        (multi_head omits the class block from the shared encoders)."""
        if self.variant == "multi_head":
            return self.state_dim
        return self.state_dim + self.num_classes

    @property
    def embedding_dim(self) -> int:
        return self.node_hidden + self.edge_hidden

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vehicle_classes"] = list(self.vehicle_classes)
        d["input_scales"] = list(self.input_scales)
        return d

    @staticmethod
    def from_dict(d: dict) -> "ModelConfig":
        d = dict(d)
        d["vehicle_classes"] = tuple(d.get("vehicle_classes", ()))
        if "input_scales" in d:
            d["input_scales"] = tuple(d["input_scales"])
        return ModelConfig(**d)
