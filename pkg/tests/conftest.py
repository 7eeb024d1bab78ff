import numpy as np
import pytest
import torch

from haicu.scene import AgentTrack, Scene, finite_difference_kinematics

# The suite's models are tiny; on small CPU hosts thread fan-out costs more
# than it saves.
torch.set_num_threads(1)


def make_track(agent_id, positions, probs, t0=0, dt=0.1, true_class=None, timesteps=None):
    """Track from raw positions; velocities/accelerations finite-differenced."""
    positions = np.asarray(positions, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if probs.ndim == 1:
        probs = np.tile(probs, (len(positions), 1))
    vel, acc = finite_difference_kinematics(positions, dt)
    states = np.hstack([positions, vel, acc])
    if timesteps is None:
        timesteps = np.arange(t0, t0 + len(positions))
    return AgentTrack(
        agent_id=agent_id,
        timesteps=timesteps,
        states=states,
        class_probs=probs,
        true_class=true_class,
    )


def make_static_scene(agent_positions, k=3, n_steps=1, dt=0.1, scene_id="s0"):
    """Scene of stationary agents at fixed positions with uniform class probs."""
    probs = np.full(k, 1.0 / k)
    tracks = []
    for name, pos in agent_positions.items():
        positions = np.tile(np.asarray(pos, dtype=float), (n_steps, 1))
        tracks.append(make_track(name, positions, probs, dt=dt))
    return Scene(scene_id=scene_id, tracks=tracks, class_names=[f"c{i}" for i in range(k)], dt=dt)


@pytest.fixture
def square_scene():
    return make_static_scene(
        {"a": (0.0, 0.0), "b": (10.0, 0.0), "c": (10.0, 10.0), "d": (0.0, 10.0)}
    )


def final_linear(head):
    """Last Linear layer of a latent head (handles both plain and MLP heads)."""
    import torch.nn as nn

    if isinstance(head, nn.Linear):
        return head
    return head[-1]
