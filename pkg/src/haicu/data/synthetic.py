"""Synthetic scene generation with a configurable perception-noise surrogate.

Motion is class-conditional (speed band, heading diffusion, optional
stop-then-go), and each timestep's perceived class-probability vector is
produced by a three-parameter noise model:

* ``confusion``: row-stochastic matrix; row = true class. It drives which
  class the perception output currently "locks onto" (the mode), and its
  rows are also the Dirichlet centers of the sampled probability vectors.
* ``concentration``: Dirichlet sharpness around the mode's row
  (``inf`` emits the row exactly, so an identity confusion yields one-hots).
* ``switch_rate``: per-step probability that the mode jumps to a *different*
  class, drawn from the true class's confusion row restricted to the other
  classes. Jumps therefore persist until the next event, giving long-lived
  most-likely-class switches whose measured per-step rate matches
  ``switch_rate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidParameterError
from ..scene import AgentTrack, Scene


@dataclass(frozen=True)
class PerceptionNoiseModel:
    """Two-level perception surrogate.

    ``confusion`` rows (indexed by true class) govern which class the
    perception output locks onto (the mode). Emitted probability vectors are
    Dirichlet samples centered on the current mode's row of ``emission``
    (``confusion`` itself by default), with ``concentration`` controlling
    their sharpness. Keeping ``emission`` separate allows datasets whose
    class-identity channel is strong while every emitted vector remains
    high-entropy; the default ties both to ``confusion``.
    """

    confusion: np.ndarray
    concentration: float
    switch_rate: float
    emission: Optional[np.ndarray] = None

    def __post_init__(self):
        conf = _validated_stochastic(self.confusion, "confusion")
        if not self.concentration > 0:
            raise InvalidParameterError(f"concentration must be positive, got {self.concentration}")
        if not 0.0 <= self.switch_rate <= 1.0:
            raise InvalidParameterError(f"switch_rate must be in [0, 1], got {self.switch_rate}")
        object.__setattr__(self, "confusion", conf)
        if self.emission is not None:
            emit = _validated_stochastic(self.emission, "emission")
            if emit.shape != conf.shape:
                raise InvalidParameterError("emission must have the same shape as confusion")
            object.__setattr__(self, "emission", emit)

    @property
    def num_classes(self) -> int:
        return int(np.asarray(self.confusion).shape[0])

    @property
    def emission_rows(self) -> np.ndarray:
        return self.confusion if self.emission is None else self.emission

    @staticmethod
    def identity(k: int) -> "PerceptionNoiseModel":
        return PerceptionNoiseModel(confusion=np.eye(k), concentration=math.inf, switch_rate=0.0)

    def to_dict(self) -> dict:
        d = {
            "confusion": np.asarray(self.confusion).tolist(),
            "concentration": self.concentration if math.isfinite(self.concentration) else "inf",
            "switch_rate": self.switch_rate,
        }
        if self.emission is not None:
            d["emission"] = np.asarray(self.emission).tolist()
        return d

    @staticmethod
    def from_dict(d: dict) -> "PerceptionNoiseModel":
        conc = d["concentration"]
        if isinstance(conc, str):
            conc = math.inf
        return PerceptionNoiseModel(
            confusion=np.asarray(d["confusion"], dtype=float),
            concentration=float(conc),
            switch_rate=float(d["switch_rate"]),
            emission=None if d.get("emission") is None else np.asarray(d["emission"], dtype=float),
        )


def _validated_stochastic(matrix, name: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidParameterError(f"{name} must be square, got shape {m.shape}")
    if np.any(m < 0) or np.any(np.abs(m.sum(axis=1) - 1.0) > 1e-6):
        raise InvalidParameterError(f"{name} rows must be non-negative and sum to 1 +- 1e-6")
    return m


@dataclass(frozen=True)
class ClassMotionSpec:
    """Kinematic profile for one agent class."""

    name: str
    speed_range: Tuple[float, float]  # m/s, cruise band
    heading_noise_std: float = 0.0  # rad per step while moving
    speed_jitter: float = 0.0  # relative std of cruise-speed noise per step
    stop_prob: float = 0.0  # probability the agent starts stopped
    move_start_range: Tuple[int, int] = (0, 0)  # step at which a stopped agent departs
    accel: float = 1.5  # m/s^2 ramp toward cruise speed
    creep_speed: float = 0.0  # m/s drift along the heading while "stopped"

    def __post_init__(self):
        lo, hi = self.speed_range
        if lo < 0 or hi < lo:
            raise InvalidParameterError(f"class {self.name}: bad speed_range {self.speed_range}")
        if not 0.0 <= self.stop_prob <= 1.0:
            raise InvalidParameterError(f"class {self.name}: bad stop_prob {self.stop_prob}")
        if self.accel <= 0:
            raise InvalidParameterError(f"class {self.name}: accel must be positive")
        if self.creep_speed < 0:
            raise InvalidParameterError(f"class {self.name}: creep_speed must be >= 0")


@dataclass(frozen=True)
class GeneratorConfig:
    class_specs: Tuple[ClassMotionSpec, ...]
    class_weights: Tuple[float, ...]
    n_scenes: int
    agents_per_scene: Tuple[int, int]
    scene_length: int
    dt: float = 0.1
    area: float = 30.0  # agents spawn uniformly in [-area, area]^2

    def __post_init__(self):
        if not self.class_specs:
            raise InvalidParameterError("at least one class spec required")
        if len(self.class_weights) != len(self.class_specs):
            raise InvalidParameterError("class_weights must match class_specs")
        if any(w < 0 for w in self.class_weights) or sum(self.class_weights) <= 0:
            raise InvalidParameterError("class_weights must be non-negative and sum > 0")
        if self.n_scenes <= 0 or self.scene_length <= 1:
            raise InvalidParameterError("n_scenes and scene_length must be positive")
        lo, hi = self.agents_per_scene
        if lo <= 0 or hi < lo:
            raise InvalidParameterError(f"bad agents_per_scene {self.agents_per_scene}")
        if self.dt <= 0:
            raise InvalidParameterError("dt must be positive")

    @property
    def class_names(self) -> List[str]:
        return [s.name for s in self.class_specs]

    def to_dict(self) -> dict:
        return {
            "classes": [
                {
                    "name": s.name,
                    "speed_range": list(s.speed_range),
                    "heading_noise_std": s.heading_noise_std,
                    "speed_jitter": s.speed_jitter,
                    "stop_prob": s.stop_prob,
                    "move_start_range": list(s.move_start_range),
                    "accel": s.accel,
                    "creep_speed": s.creep_speed,
                }
                for s in self.class_specs
            ],
            "class_weights": list(self.class_weights),
            "n_scenes": self.n_scenes,
            "agents_per_scene": list(self.agents_per_scene),
            "scene_length": self.scene_length,
            "dt": self.dt,
            "area": self.area,
        }

    @staticmethod
    def from_dict(d: dict) -> "GeneratorConfig":
        try:
            specs = tuple(
                ClassMotionSpec(
                    name=c["name"],
                    speed_range=tuple(c["speed_range"]),
                    heading_noise_std=c.get("heading_noise_std", 0.0),
                    speed_jitter=c.get("speed_jitter", 0.0),
                    stop_prob=c.get("stop_prob", 0.0),
                    move_start_range=tuple(c.get("move_start_range", (0, 0))),
                    accel=c.get("accel", 1.5),
                    creep_speed=c.get("creep_speed", 0.0),
                )
                for c in d["classes"]
            )
            agents = d["agents_per_scene"]
            if isinstance(agents, int):
                agents = (agents, agents)
            return GeneratorConfig(
                class_specs=specs,
                class_weights=tuple(d.get("class_weights", [1.0] * len(specs))),
                n_scenes=int(d["n_scenes"]),
                agents_per_scene=tuple(agents),
                scene_length=int(d["scene_length"]),
                dt=float(d.get("dt", 0.1)),
                area=float(d.get("area", 30.0)),
            )
        except KeyError as exc:
            raise InvalidParameterError(f"generator config missing field {exc}") from exc


def _sample_mode_sequence(
    rng: np.random.Generator, true_class: int, noise: PerceptionNoiseModel, length: int
) -> np.ndarray:
    """Perceived-mode sequence: initial draw from the true class's confusion row,
    then a different-class jump with probability switch_rate per step."""
    k = noise.num_classes
    row = noise.confusion[true_class]
    modes = np.empty(length, dtype=int)
    modes[0] = rng.choice(k, p=row)
    for t in range(1, length):
        m = modes[t - 1]
        if k > 1 and rng.random() < noise.switch_rate:
            others = np.delete(np.arange(k), m)
            w = row[others]
            if w.sum() <= 0:
                w = np.ones_like(w)
            modes[t] = rng.choice(others, p=w / w.sum())
        else:
            modes[t] = m
    return modes


def _sample_probs(rng: np.random.Generator, noise: PerceptionNoiseModel, modes: np.ndarray) -> np.ndarray:
    rows = noise.emission_rows[modes]
    if math.isinf(noise.concentration):
        return rows.copy()
    alpha = np.maximum(noise.concentration * rows, 1e-12)
    out = np.empty_like(rows)
    for i in range(rows.shape[0]):
        out[i] = rng.dirichlet(alpha[i])
    # Dirichlet tails can underflow a coordinate to exactly 0; that is still a
    # valid simplex point, but guard against a fully degenerate all-zero draw.
    bad = out.sum(axis=1) <= 0
    out[bad] = rows[bad]
    return out


def _rollout_motion(
    rng: np.random.Generator, spec: ClassMotionSpec, length: int, dt: float, area: float
):
    pos = rng.uniform(-area, area, size=2)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    cruise = rng.uniform(*spec.speed_range)
    stopped = rng.random() < spec.stop_prob
    if stopped and spec.move_start_range[1] > 0:
        move_start = int(rng.integers(spec.move_start_range[0], spec.move_start_range[1] + 1))
    else:
        move_start = 0
    positions = np.empty((length, 2))
    velocities = np.empty((length, 2))
    speed = 0.0 if move_start > 0 else cruise
    for t in range(length):
        if t >= move_start:
            speed = min(cruise, speed + spec.accel * dt)
            if spec.speed_jitter > 0:
                speed = max(0.0, speed + rng.normal(0.0, spec.speed_jitter * cruise))
            heading += rng.normal(0.0, spec.heading_noise_std)
        else:
            speed = spec.creep_speed
        vel = speed * np.array([math.cos(heading), math.sin(heading)])
        positions[t] = pos
        velocities[t] = vel
        pos = pos + vel * dt
    accelerations = np.gradient(velocities, dt, axis=0) if length > 1 else np.zeros_like(velocities)
    return positions, velocities, accelerations


def generate_synthetic(
    config: GeneratorConfig, noise: PerceptionNoiseModel, seed: int
) -> List[Scene]:
    """Generate scenes deterministically from (config, noise, seed)."""
    if noise.num_classes != len(config.class_specs):
        raise InvalidParameterError(
            f"noise model has K={noise.num_classes} but config names {len(config.class_specs)} classes"
        )
    rng = np.random.default_rng(seed)
    weights = np.asarray(config.class_weights, dtype=float)
    weights = weights / weights.sum()
    scenes = []
    for s in range(config.n_scenes):
        n_agents = int(rng.integers(config.agents_per_scene[0], config.agents_per_scene[1] + 1))
        tracks = []
        for a in range(n_agents):
            true_class = int(rng.choice(len(weights), p=weights))
            spec = config.class_specs[true_class]
            positions, velocities, accelerations = _rollout_motion(
                rng, spec, config.scene_length, config.dt, config.area
            )
            modes = _sample_mode_sequence(rng, true_class, noise, config.scene_length)
            probs = _sample_probs(rng, noise, modes)
            states = np.hstack([positions, velocities, accelerations])
            tracks.append(
                AgentTrack(
                    agent_id=f"a{a}",
                    timesteps=np.arange(config.scene_length),
                    states=states,
                    class_probs=probs,
                    true_class=true_class,
                )
            )
        scenes.append(
            Scene(
                scene_id=f"scene{s:05d}",
                tracks=tracks,
                class_names=config.class_names,
                dt=config.dt,
            )
        )
    return scenes
