"""What-if prediction: override input class probabilities and re-predict.

Overrides rewrite only probability rows (states untouched) across the whole
history window, both in an agent's own history and wherever it appears as a
neighbor. Smoothness probing interpolates one agent's probabilities toward a
target and traces how the predictive mixture moves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import InvalidParameterError
from .model.batching import ObservationBatch
from .model.distribution import TrajectoryDistribution, predict
from .model.network import TrajectoryForecaster
from .scene import ClassProbVector

OVERRIDE_MODES = ("keep", "uniform", "one_hot", "custom", "interpolate")


@dataclass(frozen=True)
class AgentOverride:
    mode: str
    class_index: Optional[int] = None  # one_hot
    probs: Optional[tuple] = None  # custom
    target: Optional[tuple] = None  # interpolate
    lam: Optional[float] = None  # interpolate, in [0, 1]

    def __post_init__(self):
        if self.mode not in OVERRIDE_MODES:
            raise InvalidParameterError(f"override mode must be one of {OVERRIDE_MODES}")
        if self.mode == "one_hot" and self.class_index is None:
            raise InvalidParameterError("one_hot override needs class_index")
        if self.mode == "custom" and self.probs is None:
            raise InvalidParameterError("custom override needs probs")
        if self.mode == "interpolate":
            if self.target is None or self.lam is None:
                raise InvalidParameterError("interpolate override needs target and lambda")
            if not 0.0 <= self.lam <= 1.0:
                raise InvalidParameterError(f"lambda must be in [0, 1], got {self.lam}")

    def row_fn(self, k: int) -> Callable[[np.ndarray], np.ndarray]:
        """Build the (K,) -> (K,) row transform for a K-class problem."""
        if self.mode == "keep":
            return lambda row: row
        if self.mode == "uniform":
            uniform = np.full(k, 1.0 / k)
            return lambda row: uniform.copy()
        if self.mode == "one_hot":
            if not 0 <= self.class_index < k:
                raise InvalidParameterError(f"class_index {self.class_index} outside [0, {k})")
            onehot = np.zeros(k)
            onehot[self.class_index] = 1.0
            return lambda row: onehot.copy()
        if self.mode == "custom":
            vec = ClassProbVector(np.asarray(self.probs, dtype=float)).probs
            if vec.size != k:
                raise InvalidParameterError(f"custom probs have {vec.size} entries, need {k}")
            return lambda row: vec.copy()
        target = ClassProbVector(np.asarray(self.target, dtype=float)).probs
        if target.size != k:
            raise InvalidParameterError(f"interpolation target has {target.size} entries, need {k}")
        lam = float(self.lam)
        return lambda row: (1.0 - lam) * row + lam * target

    def to_dict(self) -> dict:
        d = {"mode": self.mode}
        if self.class_index is not None:
            d["class_index"] = self.class_index
        if self.probs is not None:
            d["probs"] = list(self.probs)
        if self.target is not None:
            d["target"] = list(self.target)
        if self.lam is not None:
            d["lambda"] = self.lam
        return d

    @staticmethod
    def from_dict(d: dict) -> "AgentOverride":
        return AgentOverride(
            mode=d["mode"],
            class_index=d.get("class_index"),
            probs=None if d.get("probs") is None else tuple(d["probs"]),
            target=None if d.get("target") is None else tuple(d["target"]),
            lam=d.get("lambda"),
        )


@dataclass(frozen=True)
class CounterfactualSpec:
    """Per-agent overrides; ``default`` applies to every agent not listed."""

    overrides: Dict[str, AgentOverride] = field(default_factory=dict)
    default: Optional[AgentOverride] = None

    @staticmethod
    def uniform_all() -> "CounterfactualSpec":
        return CounterfactualSpec(default=AgentOverride(mode="uniform"))

    @staticmethod
    def one_hot_all(class_index: int) -> "CounterfactualSpec":
        return CounterfactualSpec(default=AgentOverride(mode="one_hot", class_index=class_index))

    def to_dict(self) -> dict:
        d = {"overrides": {a: o.to_dict() for a, o in self.overrides.items()}}
        if self.default is not None:
            d["default"] = self.default.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "CounterfactualSpec":
        return CounterfactualSpec(
            overrides={a: AgentOverride.from_dict(o) for a, o in d.get("overrides", {}).items()},
            default=None if d.get("default") is None else AgentOverride.from_dict(d["default"]),
        )


def apply_counterfactual(batch: ObservationBatch, spec: CounterfactualSpec) -> ObservationBatch:
    """New batch with probability rows rewritten per the spec; states untouched."""
    known = set(batch.agent_ids)
    for ids in batch.neighbor_ids:
        known.update(ids)
    unknown = [a for a in spec.overrides if a not in known]
    if unknown:
        raise InvalidParameterError(f"spec references agents not in batch: {unknown}")
    k = batch.num_classes
    transforms: Dict[str, Callable[[np.ndarray], np.ndarray]] = {}
    if spec.default is not None:
        fn = spec.default.row_fn(k)
        for agent in known:
            transforms[agent] = fn
    for agent, override in spec.overrides.items():
        transforms[agent] = override.row_fn(k)
    return batch.replace_class_probs(transforms)


@dataclass
class SmoothnessCurve:
    lambdas: np.ndarray
    divergence: np.ndarray  # mean mode-mean displacement + mode-weight TV, vs lambda=0
    uncertainty: np.ndarray  # MC differential entropy of the mixture, mean per step

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas.tolist(),
            "divergence": self.divergence.tolist(),
            "uncertainty": self.uncertainty.tolist(),
        }


def _divergence(dist: TrajectoryDistribution, base: TrajectoryDistribution) -> float:
    mean_shift = float(np.linalg.norm(dist.means - base.means, axis=-1).mean())
    tv = 0.5 * float(np.abs(dist.weights - base.weights).sum())
    return mean_shift + tv


def probe_smoothness(
    model: TrajectoryForecaster,
    batch: ObservationBatch,
    agent_id: str,
    target,
    lambdas: Sequence[float],
    horizon: Optional[int] = None,
    entropy_samples: int = 256,
    entropy_seed: int = 0,
    path: str = "simplex",
) -> SmoothnessCurve:
    """Trace predictions along the interpolation from an agent's probabilities
    to ``target``.

    Divergence compares each prediction against the lambda=0 prediction with
    index-matched mixture components (weights and component slots are produced
    by the same frozen network, so slot identity is stable). Uncertainty is a
    seeded Monte-Carlo estimate of mixture entropy, with common random numbers
    across lambda values. ``path`` picks linear interpolation on the simplex
    (default) or in log space.
    """
    lambdas = np.asarray(list(lambdas), dtype=float)
    if lambdas.size == 0:
        raise InvalidParameterError("lambda grid must be non-empty")
    if np.any((lambdas < 0) | (lambdas > 1)):
        raise InvalidParameterError("lambda values must lie in [0, 1]")
    if path not in ("simplex", "logit"):
        raise InvalidParameterError(f"path must be 'simplex' or 'logit', got {path!r}")
    if agent_id not in batch.agent_ids:
        raise InvalidParameterError(f"agent {agent_id} not in batch")
    row_index = batch.agent_ids.index(agent_id)
    probe = batch.subset([row_index])
    target_vec = ClassProbVector(np.asarray(target, dtype=float)).probs

    def batch_at(lam: float) -> ObservationBatch:
        if path == "simplex":
            spec = CounterfactualSpec(
                overrides={agent_id: AgentOverride(mode="interpolate", target=tuple(target_vec), lam=lam)}
            )
            return apply_counterfactual(probe, spec)

        def log_fn(row: np.ndarray) -> np.ndarray:
            mix = (1.0 - lam) * np.log(np.clip(row, 1e-12, None)) + lam * np.log(
                np.clip(target_vec, 1e-12, None)
            )
            e = np.exp(mix - mix.max())
            return e / e.sum()

        return probe.replace_class_probs({agent_id: log_fn})

    base_dist = predict(model, batch_at(0.0), horizon=horizon)[0]
    divergences = []
    entropies = []
    for lam in lambdas:
        dist = base_dist if lam == 0.0 else predict(model, batch_at(float(lam)), horizon=horizon)[0]
        divergences.append(_divergence(dist, base_dist))
        entropies.append(dist.entropy_estimate(n_samples=entropy_samples, seed=entropy_seed))
    return SmoothnessCurve(
        lambdas=lambdas,
        divergence=np.asarray(divergences),
        uncertainty=np.asarray(entropies),
    )
