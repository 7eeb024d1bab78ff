"""In-memory data model: agent states, class probabilities, scenes, interaction graphs.

State vectors are 6-dimensional: (px, py, vx, vy, ax, ay) in meters, m/s and
m/s^2. Timesteps are integer indices at `dt` seconds per step (0.1 by default).
Class-probability vectors live on the (K-1)-simplex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import EmptySceneError, InvalidParameterError, SimplexViolationError

STATE_DIM = 6

# |sum(probs) - 1| below this is silently exact; between this and REPAIR_TOL the
# vector is renormalized; beyond REPAIR_TOL construction fails.
SIMPLEX_TOL = 1e-6
SIMPLEX_REPAIR_TOL = 1e-3


@dataclass(frozen=True)
class AgentState:
    """Kinematic state of one agent at one timestep."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    timestep: int

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if vec.shape != (2,):
                raise InvalidParameterError(f"{name} must be a 2-vector, got shape {vec.shape}")
            if not np.all(np.isfinite(vec)):
                raise InvalidParameterError(f"{name} contains non-finite values: {vec}")
            object.__setattr__(self, name, vec)

    def as_vector(self) -> np.ndarray:
        """Return the flat (6,) state vector (px, py, vx, vy, ax, ay)."""
        return np.concatenate([self.position, self.velocity, self.acceleration])


class ClassProbVector:
    """A point on the (K-1)-simplex.

    Vectors whose entries sum to 1 within ``SIMPLEX_REPAIR_TOL`` are
    renormalized on construction; anything further off (or with negative
    entries) is rejected.
    """

    __slots__ = ("probs",)

    def __init__(self, probs: Sequence[float]):
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise SimplexViolationError(f"probability vector must be 1-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise SimplexViolationError(f"probability vector contains non-finite entries: {arr}")
        if np.any(arr < -1e-9) or np.any(arr > 1.0 + SIMPLEX_REPAIR_TOL):
            raise SimplexViolationError(f"entries outside [0, 1]: {arr}")
        arr = np.clip(arr, 0.0, None)
        total = arr.sum()
        if abs(total - 1.0) > SIMPLEX_REPAIR_TOL:
            raise SimplexViolationError(f"entries sum to {total:.6f}, more than {SIMPLEX_REPAIR_TOL} from 1")
        if abs(total - 1.0) > SIMPLEX_TOL:  # idempotent: already-valid vectors pass through
            arr = arr / total
        self.probs = arr
        self.probs.setflags(write=False)

    @property
    def num_classes(self) -> int:
        return int(self.probs.size)

    def argmax(self) -> int:
        """Most-likely class; ties resolve to the lowest class index."""
        return int(np.argmax(self.probs))

    def __len__(self) -> int:
        return self.num_classes

    def __repr__(self) -> str:
        return f"ClassProbVector({np.array2string(self.probs, precision=4)})"


def class_entropy(probs) -> float:
    """Shannon entropy of a class-probability vector, in nats.

    Accepts a ClassProbVector or a raw array already on the simplex. Uses the
    convention 0 * ln 0 = 0; the result lies in [0, ln K].
    """
    if isinstance(probs, ClassProbVector):
        p = probs.probs
    else:
        p = ClassProbVector(probs).probs
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def finite_difference_kinematics(positions: np.ndarray, dt: float):
    """Estimate velocities and accelerations from a contiguous position track.

    Central differences in the interior, one-sided at the ends. Single-sample
    tracks get zero velocity/acceleration.

    Parameters
    ----------
    positions : (n, 2) ndarray
    dt : seconds per step

    Returns
    -------
    (velocities, accelerations) : two (n, 2) ndarrays
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    if n == 1:
        return np.zeros_like(positions), np.zeros_like(positions)
    vel = np.gradient(positions, dt, axis=0)
    acc = np.gradient(vel, dt, axis=0)
    return vel, acc


class AgentTrack:
    """Time-indexed observation record for one agent.

    Backed by arrays: ``timesteps`` (n,), ``states`` (n, 6), ``class_probs``
    (n, K). Timesteps are strictly increasing; non-contiguous jumps mark
    observation gaps, which split the track into segments (no interpolation).
    """

    def __init__(
        self,
        agent_id: str,
        timesteps: Sequence[int],
        states: np.ndarray,
        class_probs: np.ndarray,
        true_class: Optional[int] = None,
    ):
        self.agent_id = str(agent_id)
        self.timesteps = np.asarray(timesteps, dtype=int)
        self.states = np.asarray(states, dtype=float)
        raw_probs = np.asarray(class_probs, dtype=float)
        n = self.timesteps.size
        if self.states.shape != (n, STATE_DIM):
            raise InvalidParameterError(
                f"agent {agent_id}: states shape {self.states.shape} != ({n}, {STATE_DIM})"
            )
        if raw_probs.ndim != 2 or raw_probs.shape[0] != n:
            raise InvalidParameterError(
                f"agent {agent_id}: class_probs shape {raw_probs.shape} does not index {n} timesteps"
            )
        if n > 1 and not np.all(np.diff(self.timesteps) > 0):
            raise InvalidParameterError(f"agent {agent_id}: timesteps must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise InvalidParameterError(f"agent {agent_id}: states contain non-finite values")
        # Validate/renormalize each row through the simplex type.
        self.class_probs = np.stack([ClassProbVector(row).probs for row in raw_probs])
        self.true_class = None if true_class is None else int(true_class)
        if self.true_class is not None and not 0 <= self.true_class < self.num_classes:
            raise InvalidParameterError(
                f"agent {agent_id}: true_class {true_class} outside [0, {self.num_classes})"
            )

    @property
    def num_classes(self) -> int:
        return int(self.class_probs.shape[1])

    def __len__(self) -> int:
        return int(self.timesteps.size)

    def index_of(self, timestep: int) -> Optional[int]:
        idx = np.searchsorted(self.timesteps, timestep)
        if idx < self.timesteps.size and self.timesteps[idx] == timestep:
            return int(idx)
        return None

    def state_at(self, timestep: int) -> Optional[AgentState]:
        idx = self.index_of(timestep)
        if idx is None:
            return None
        s = self.states[idx]
        return AgentState(position=s[0:2], velocity=s[2:4], acceleration=s[4:6], timestep=timestep)

    def probs_at(self, timestep: int) -> Optional[ClassProbVector]:
        idx = self.index_of(timestep)
        if idx is None:
            return None
        return ClassProbVector(self.class_probs[idx])

    def segments(self) -> Iterator[slice]:
        """Yield index slices of maximal contiguous-timestep runs."""
        if len(self) == 0:
            return
        breaks = np.flatnonzero(np.diff(self.timesteps) != 1)
        start = 0
        for b in breaks:
            yield slice(start, int(b) + 1)
            start = int(b) + 1
        yield slice(start, len(self))

    def segment_containing(self, timestep: int) -> Optional[slice]:
        idx = self.index_of(timestep)
        if idx is None:
            return None
        for seg in self.segments():
            if seg.start <= idx < seg.stop:
                return seg
        return None

    def argmax_classes(self) -> np.ndarray:
        """Per-timestep most-likely class (ties -> lowest index)."""
        return np.argmax(self.class_probs, axis=1)

    def modal_class(self) -> int:
        """The most often most-likely class over the whole track."""
        counts = np.bincount(self.argmax_classes(), minlength=self.num_classes)
        return int(np.argmax(counts))


class Scene:
    """A set of agent tracks sharing a class vocabulary and time base."""

    def __init__(self, scene_id: str, tracks: Sequence[AgentTrack], class_names: Sequence[str], dt: float = 0.1):
        if dt <= 0:
            raise InvalidParameterError(f"dt must be positive, got {dt}")
        self.scene_id = str(scene_id)
        self.class_names = list(class_names)
        self.dt = float(dt)
        self.tracks = list(tracks)
        k = len(self.class_names)
        for track in self.tracks:
            if track.num_classes != k:
                raise InvalidParameterError(
                    f"scene {scene_id}: track {track.agent_id} has K={track.num_classes}, scene has K={k}"
                )
        self._by_id = {t.agent_id: t for t in self.tracks}
        if len(self._by_id) != len(self.tracks):
            raise InvalidParameterError(f"scene {scene_id}: duplicate agent ids")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def track(self, agent_id: str) -> AgentTrack:
        return self._by_id[agent_id]

    def agent_ids(self):
        return list(self._by_id.keys())

    def agents_present(self, timestep: int):
        return [t.agent_id for t in self.tracks if t.index_of(timestep) is not None]

    def n_agents_at(self, timestep: int) -> int:
        return len(self.agents_present(timestep))

    def timesteps(self) -> np.ndarray:
        """Sorted union of all observed timesteps."""
        if not self.tracks:
            return np.empty(0, dtype=int)
        return np.unique(np.concatenate([t.timesteps for t in self.tracks]))


@dataclass(frozen=True)
class SceneGraph:
    """Undirected interaction graph over the agents present at one timestep.

    An edge joins two agents whose positions are within ``distance_threshold_d``
    meters (inclusive).
    """

    timestep: int
    nodes: tuple
    edges: frozenset  # of frozenset({id_a, id_b})
    distance_threshold_d: float

    def has_edge(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.edges

    def neighbors(self, agent_id: str):
        out = []
        for e in self.edges:
            if agent_id in e:
                (other,) = e - {agent_id}
                out.append(other)
        return sorted(out)


def build_scene_graph(scene: Scene, timestep: int, d: float) -> SceneGraph:
    """Build the interaction graph at one timestep.

    Agents i, j are connected iff ||p_i - p_j||_2 <= d. The boundary is
    inclusive: a pair at distance exactly d gets an edge.
    """
    if d <= 0:
        raise InvalidParameterError(f"distance threshold must be positive, got {d}")
    present = scene.agents_present(timestep)
    if not present:
        raise EmptySceneError(f"scene {scene.scene_id}: no agents observed at timestep {timestep}")
    positions = np.stack([scene.track(a).state_at(timestep).position for a in present])
    edges = set()
    for i in range(len(present)):
        deltas = positions[i + 1 :] - positions[i]
        dists = np.hypot(deltas[:, 0], deltas[:, 1])
        for j_off in np.flatnonzero(dists <= d):
            edges.add(frozenset((present[i], present[i + 1 + int(j_off)])))
    return SceneGraph(
        timestep=int(timestep),
        nodes=tuple(present),
        edges=frozenset(edges),
        distance_threshold_d=float(d),
    )
