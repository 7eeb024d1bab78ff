"""Tensorization of scenes into padded observation batches.

Each batch row is one (agent, timestep) prediction instance. Histories cover
the H+1 steps ending at the anchor timestep; rows the agent was not observed
at are zero-filled and masked out (front padding). Neighbor features carry the
raw (state ++ class-prob) sequences of interacting agents, zeroed outside
co-presence; they are summed inside the encoder, so the per-neighbor layout
only exists to keep counterfactual overrides addressable by agent id.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidParameterError
from ..scene import Scene, build_scene_graph
from .config import ModelConfig


@dataclass(frozen=True)
class Instance:
    scene_id: str
    agent_id: str
    timestep: int


@dataclass
class ObservationBatch:
    scene_ids: List[str]
    agent_ids: List[str]
    anchor_timesteps: np.ndarray  # (B,)
    x: np.ndarray  # (B, H+1, D)
    c_hat: np.ndarray  # (B, H+1, K)
    mask: np.ndarray  # (B, H+1) bool
    neighbor_feats: np.ndarray  # (B, M, H+1, D+K)
    neighbor_step_mask: np.ndarray  # (B, M, H+1) bool
    neighbor_ids: List[List[str]]
    y: Optional[np.ndarray]  # (B, T, 2) or None
    dt: float

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def state_dim(self) -> int:
        return self.x.shape[2]

    @property
    def num_classes(self) -> int:
        return self.c_hat.shape[2]

    def current_state(self) -> np.ndarray:
        """(B, D) state at the anchor timestep."""
        return self.x[:, -1, :]

    def subset(self, indices: Sequence[int]) -> "ObservationBatch":
        idx = list(indices)
        return ObservationBatch(
            scene_ids=[self.scene_ids[i] for i in idx],
            agent_ids=[self.agent_ids[i] for i in idx],
            anchor_timesteps=self.anchor_timesteps[idx],
            x=self.x[idx],
            c_hat=self.c_hat[idx],
            mask=self.mask[idx],
            neighbor_feats=self.neighbor_feats[idx],
            neighbor_step_mask=self.neighbor_step_mask[idx],
            neighbor_ids=[self.neighbor_ids[i] for i in idx],
            y=None if self.y is None else self.y[idx],
            dt=self.dt,
        )

    def rotated(self, gamma_deg: float) -> "ObservationBatch":
        """Rotate every kinematic vector (positions, velocities, accelerations,
        futures) about the scene origin; class probabilities are untouched."""
        g = np.radians(gamma_deg)
        c, s = np.cos(g), np.sin(g)
        rot = np.array([[c, s], [-s, c]], dtype=self.x.dtype)  # right-multiply form
        x = self.x.copy()
        nf = self.neighbor_feats.copy()
        d = self.state_dim
        for lo in range(0, d, 2):
            x[..., lo : lo + 2] = x[..., lo : lo + 2] @ rot
            nf[..., lo : lo + 2] = nf[..., lo : lo + 2] @ rot
        y = None
        if self.y is not None:
            y = self.y @ rot
        return replace(self, x=x, neighbor_feats=nf, y=y)

    def replace_class_probs(
        self, transforms: Dict[str, Callable[[np.ndarray], np.ndarray]]
    ) -> "ObservationBatch":
        """Return a copy with per-agent probability rows rewritten.

        ``transforms`` maps agent ids to row functions (K,) -> (K,). Rows are
        rewritten wherever the agent is actually observed, both in its own
        history and wherever it appears as a neighbor. States are untouched.
        """
        c_hat = self.c_hat.copy()
        nf = self.neighbor_feats.copy()
        d = self.state_dim
        for i, agent in enumerate(self.agent_ids):
            fn = transforms.get(agent)
            if fn is not None:
                for t in np.flatnonzero(self.mask[i]):
                    c_hat[i, t] = fn(self.c_hat[i, t])
            for j, nid in enumerate(self.neighbor_ids[i]):
                fn_n = transforms.get(nid)
                if fn_n is None:
                    continue
                for t in np.flatnonzero(self.neighbor_step_mask[i, j]):
                    nf[i, j, t, d:] = fn_n(self.neighbor_feats[i, j, t, d:])
        return replace(self, c_hat=c_hat, neighbor_feats=nf)


def enumerate_instances(
    scenes: Sequence[Scene],
    config: ModelConfig,
    require_future: bool = True,
    horizon: Optional[int] = None,
    timesteps: Optional[Sequence[int]] = None,
) -> List[Instance]:
    """List eligible (scene, agent, timestep) prediction instances.

    An instance needs the agent observed at the anchor timestep and, when
    ``require_future``, a gap-free future of ``horizon`` steps. Histories may
    be arbitrarily short (they are masked).
    """
    horizon = horizon or config.prediction_steps
    out: List[Instance] = []
    for scene in scenes:
        for track in scene.tracks:
            for seg in track.segments():
                seg_times = track.timesteps[seg]
                for t in seg_times:
                    if timesteps is not None and int(t) not in timesteps:
                        continue
                    if require_future and int(t) + horizon > int(seg_times[-1]):
                        continue
                    out.append(Instance(scene.scene_id, track.agent_id, int(t)))
    return out


class _GraphCache:
    def __init__(self, distance: float):
        self.distance = distance
        self._cache: Dict[Tuple[str, int], object] = {}

    def neighbors(self, scene: Scene, timestep: int, agent_id: str) -> List[str]:
        key = (scene.scene_id, timestep)
        graph = self._cache.get(key)
        if graph is None:
            graph = build_scene_graph(scene, timestep, self.distance)
            self._cache[key] = graph
        if agent_id not in graph.nodes:
            return []
        return graph.neighbors(agent_id)


def build_batch(
    scenes: Sequence[Scene],
    instances: Sequence[Instance],
    config: ModelConfig,
    horizon: Optional[int] = None,
    require_future: bool = True,
) -> ObservationBatch:
    """Assemble a padded batch for the given instances."""
    if not instances:
        raise InvalidParameterError("cannot build an empty batch")
    by_id = {s.scene_id: s for s in scenes}
    horizon = horizon or config.prediction_steps
    h_len = config.history_steps + 1
    d = config.state_dim
    k = config.num_classes
    cache = _GraphCache(config.edge_distance)

    rows = []
    for inst in instances:
        scene = by_id[inst.scene_id]
        track = scene.track(inst.agent_id)
        seg = track.segment_containing(inst.timestep)
        if seg is None:
            raise InvalidParameterError(
                f"agent {inst.agent_id} not observed at t={inst.timestep} in scene {inst.scene_id}"
            )
        seg_times = track.timesteps[seg]
        x = np.zeros((h_len, d), dtype=np.float32)
        c_hat = np.zeros((h_len, k), dtype=np.float32)
        mask = np.zeros(h_len, dtype=bool)
        window = range(inst.timestep - config.history_steps, inst.timestep + 1)
        for slot, tau in enumerate(window):
            if tau < seg_times[0] or tau > inst.timestep:
                continue
            idx = track.index_of(tau)
            x[slot] = track.states[idx]
            c_hat[slot] = track.class_probs[idx]
            mask[slot] = True

        if config.edge_window_union:
            neighbor_set: Dict[str, None] = {}
            for slot, tau in enumerate(window):
                if not mask[slot]:
                    continue
                for nid in cache.neighbors(scene, tau, inst.agent_id):
                    neighbor_set[nid] = None
            neighbors = sorted(neighbor_set.keys())
        else:
            neighbors = cache.neighbors(scene, inst.timestep, inst.agent_id)

        n_feats = np.zeros((len(neighbors), h_len, d + k), dtype=np.float32)
        n_mask = np.zeros((len(neighbors), h_len), dtype=bool)
        for j, nid in enumerate(neighbors):
            ntrack = scene.track(nid)
            for slot, tau in enumerate(window):
                if not mask[slot]:
                    continue  # co-presence: agent itself must be observed
                idx = ntrack.index_of(tau)
                if idx is None:
                    continue
                n_feats[j, slot, :d] = ntrack.states[idx]
                n_feats[j, slot, d:] = ntrack.class_probs[idx]
                n_mask[j, slot] = True

        y = None
        if require_future:
            future_times = np.arange(inst.timestep + 1, inst.timestep + horizon + 1)
            if future_times[-1] > seg_times[-1]:
                raise InvalidParameterError(
                    f"agent {inst.agent_id} lacks a {horizon}-step future at t={inst.timestep}"
                )
            idx0 = track.index_of(inst.timestep)
            y = track.states[idx0 + 1 : idx0 + horizon + 1, 0:2].astype(np.float32)
        rows.append((inst, x, c_hat, mask, neighbors, n_feats, n_mask, y))

    max_n = max(len(r[4]) for r in rows)
    b = len(rows)
    batch = ObservationBatch(
        scene_ids=[r[0].scene_id for r in rows],
        agent_ids=[r[0].agent_id for r in rows],
        anchor_timesteps=np.array([r[0].timestep for r in rows]),
        x=np.stack([r[1] for r in rows]),
        c_hat=np.stack([r[2] for r in rows]),
        mask=np.stack([r[3] for r in rows]),
        neighbor_feats=np.zeros((b, max_n, h_len, d + k), dtype=np.float32),
        neighbor_step_mask=np.zeros((b, max_n, h_len), dtype=bool),
        neighbor_ids=[list(r[4]) for r in rows],
        y=None if rows[0][7] is None else np.stack([r[7] for r in rows]),
        dt=by_id[rows[0][0].scene_id].dt,
    )
    for i, r in enumerate(rows):
        n = len(r[4])
        if n:
            batch.neighbor_feats[i, :n] = r[5]
            batch.neighbor_step_mask[i, :n] = r[6]
    return batch


def scene_batch(
    scene: Scene,
    timestep: int,
    config: ModelConfig,
    agent_ids: Optional[Sequence[str]] = None,
    horizon: Optional[int] = None,
    require_future: bool = False,
) -> ObservationBatch:
    """Batch of all (or selected) agents present in one scene at one timestep."""
    present = scene.agents_present(timestep)
    if agent_ids is not None:
        missing = [a for a in agent_ids if a not in present]
        if missing:
            raise InvalidParameterError(
                f"agents {missing} not observed at t={timestep} in scene {scene.scene_id}"
            )
        present = list(agent_ids)
    if not present:
        raise InvalidParameterError(f"no agents at t={timestep} in scene {scene.scene_id}")
    instances = [Instance(scene.scene_id, a, timestep) for a in present]
    return build_batch([scene], instances, config, horizon=horizon, require_future=require_future)
