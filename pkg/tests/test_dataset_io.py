import json

import numpy as np
import pytest

from haicu.data import load_scenes, record_to_scene, scene_to_record, write_scenes
from haicu.errors import SceneFormatError

from conftest import make_static_scene, make_track
from haicu.scene import Scene


def _two_agent_scene(n_steps=30):
    rng = np.random.default_rng(0)
    tracks = []
    for name in ("a", "b"):
        positions = np.cumsum(rng.normal(0, 0.2, size=(n_steps, 2)), axis=0)
        probs = rng.dirichlet(np.ones(3), size=n_steps)
        tracks.append(make_track(name, positions, probs, true_class=1))
    return Scene("sc", tracks, class_names=["car", "bicycle", "pedestrian"], dt=0.1)


def test_round_trip_is_field_exact(tmp_path):
    scene = _two_agent_scene()
    path = tmp_path / "scenes.jsonl"
    write_scenes([scene], path)
    loaded = load_scenes(path)
    assert len(loaded) == 1
    back = loaded[0]
    assert back.scene_id == scene.scene_id
    assert back.class_names == scene.class_names
    assert back.dt == scene.dt
    for a in scene.agent_ids():
        np.testing.assert_allclose(back.track(a).states, scene.track(a).states, atol=1e-9)
        np.testing.assert_allclose(back.track(a).class_probs, scene.track(a).class_probs, atol=1e-9)
        assert back.track(a).true_class == scene.track(a).true_class
    # Write-load-write gives byte-identical files.
    path2 = tmp_path / "scenes2.jsonl"
    write_scenes(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_scene_with_constant_agent_count(tmp_path):
    scene = _two_agent_scene(n_steps=30)
    path = tmp_path / "s.jsonl"
    write_scenes([scene], path)
    loaded = load_scenes(path)[0]
    for t in range(30):
        assert loaded.n_agents_at(t) == 2


def test_probs_renormalized_within_tolerance(tmp_path):
    record = scene_to_record(_two_agent_scene(n_steps=3))
    record["agents"][0]["steps"][0]["probs"] = [0.6, 0.4001, 0.0]  # sums to 1.0001
    path = tmp_path / "s.jsonl"
    path.write_text(json.dumps(record) + "\n", encoding="utf-8")
    scene = load_scenes(path)[0]
    row = scene.track("a").class_probs[0]
    assert abs(row.sum() - 1.0) <= 1e-6
    np.testing.assert_allclose(row, np.array([0.6, 0.4001, 0.0]) / 1.0001, atol=1e-12)


def test_bad_probs_rejected_with_location(tmp_path):
    record = scene_to_record(_two_agent_scene(n_steps=3))
    record["agents"][1]["steps"][2]["probs"] = [0.7, 0.7, 0.0]
    path = tmp_path / "s.jsonl"
    path.write_text(json.dumps(record) + "\n", encoding="utf-8")
    with pytest.raises(SceneFormatError) as exc:
        load_scenes(path)
    msg = str(exc.value)
    assert "agent b" in msg and "t=2" in msg


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "s.jsonl"
    path.write_text('{"scene_id": "x"\n', encoding="utf-8")
    with pytest.raises(SceneFormatError) as exc:
        load_scenes(path)
    assert ":1:" in str(exc.value)


def test_missing_velocities_are_finite_differenced(tmp_path):
    # Constant-velocity motion: derived velocity should equal the true one.
    steps = [
        {"t": t, "px": 2.0 * 0.1 * t, "py": 0.0, "probs": [1.0, 0.0]} for t in range(5)
    ]
    record = {
        "scene_id": "fd",
        "dt": 0.1,
        "class_names": ["car", "ped"],
        "agents": [{"agent_id": "a", "steps": steps}],
    }
    path = tmp_path / "s.jsonl"
    path.write_text(json.dumps(record) + "\n", encoding="utf-8")
    scene = load_scenes(path)[0]
    np.testing.assert_allclose(scene.track("a").states[:, 2], 2.0, atol=1e-9)
    np.testing.assert_allclose(scene.track("a").states[:, 4], 0.0, atol=1e-6)


def test_gap_track_round_trips_segments(tmp_path):
    track = make_track(
        "a", np.zeros((5, 2)), np.array([1.0, 0.0]), timesteps=np.array([0, 1, 2, 7, 8])
    )
    scene = Scene("g", [track], class_names=["x", "y"], dt=0.1)
    path = tmp_path / "s.jsonl"
    write_scenes([scene], path)
    back = load_scenes(path)[0]
    assert [(s.start, s.stop) for s in back.track("a").segments()] == [(0, 3), (3, 5)]
