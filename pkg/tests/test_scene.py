import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haicu.errors import EmptySceneError, InvalidParameterError, SimplexViolationError
from haicu.scene import (
    AgentState,
    AgentTrack,
    ClassProbVector,
    build_scene_graph,
    class_entropy,
)

from conftest import make_static_scene, make_track


class TestClassProbVector:
    def test_exact_simplex_accepted(self):
        v = ClassProbVector([0.2, 0.3, 0.5])
        assert abs(v.probs.sum() - 1.0) <= 1e-6

    def test_near_simplex_renormalized(self):
        v = ClassProbVector([0.6, 0.4001, 0.0])  # sums to 1.0001
        assert abs(v.probs.sum() - 1.0) <= 1e-6
        assert v.probs[2] == 0.0

    def test_far_from_simplex_rejected(self):
        with pytest.raises(SimplexViolationError):
            ClassProbVector([0.7, 0.7, 0.0])

    def test_negative_entry_rejected(self):
        with pytest.raises(SimplexViolationError):
            ClassProbVector([1.2, -0.2])

    def test_nan_rejected(self):
        with pytest.raises(SimplexViolationError):
            ClassProbVector([float("nan"), 1.0])

    @given(st.lists(st.floats(min_value=0.0, max_value=10.0), min_size=1, max_size=12))
    def test_normalized_vectors_always_valid(self, raw):
        total = sum(raw)
        if total <= 0:
            return
        v = ClassProbVector([x / total for x in raw])
        assert abs(v.probs.sum() - 1.0) <= 1e-6
        assert np.all(v.probs >= 0.0) and np.all(v.probs <= 1.0)


class TestClassEntropy:
    def test_one_hot_is_zero(self):
        for k in (2, 5, 11):
            onehot = np.zeros(k)
            onehot[k // 2] = 1.0
            assert class_entropy(onehot) == 0.0

    def test_uniform_11_matches_ln11(self):
        h = class_entropy(np.full(11, 1.0 / 11.0))
        assert abs(h - math.log(11)) < 1e-12
        assert round(h, 2) == 2.40

    def test_two_class_symmetric(self):
        assert abs(class_entropy([0.5, 0.5]) - math.log(2)) < 1e-12

    @given(st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=2, max_size=11))
    def test_bounds(self, raw):
        p = np.asarray(raw) / sum(raw)
        h = class_entropy(p)
        assert -1e-12 <= h <= math.log(len(raw)) + 1e-9


class TestAgentState:
    def test_rejects_nan(self):
        with pytest.raises(InvalidParameterError):
            AgentState(
                position=np.array([np.nan, 0.0]),
                velocity=np.zeros(2),
                acceleration=np.zeros(2),
                timestep=0,
            )

    def test_state_vector_is_six_dimensional(self):
        s = AgentState(
            position=np.array([1.0, 2.0]),
            velocity=np.array([3.0, 4.0]),
            acceleration=np.array([5.0, 6.0]),
            timestep=7,
        )
        assert s.as_vector().shape == (6,)
        np.testing.assert_allclose(s.as_vector(), [1, 2, 3, 4, 5, 6])


class TestTrackSegments:
    def test_gap_splits_segments(self):
        track = make_track(
            "a",
            np.zeros((5, 2)),
            np.array([1.0, 0.0]),
            timesteps=np.array([0, 1, 2, 10, 11]),
        )
        segs = list(track.segments())
        assert [(s.start, s.stop) for s in segs] == [(0, 3), (3, 5)]

    def test_non_increasing_timesteps_rejected(self):
        with pytest.raises(InvalidParameterError):
            make_track("a", np.zeros((3, 2)), np.array([1.0, 0.0]), timesteps=np.array([0, 2, 1]))


class TestBuildSceneGraph:
    def test_boundary_distance_has_edge(self):
        scene = make_static_scene({"a": (0.0, 0.0), "b": (3.0, 4.0)})
        graph = build_scene_graph(scene, 0, d=5.0)
        assert graph.has_edge("a", "b")

    def test_just_past_boundary_has_no_edge(self):
        scene = make_static_scene({"a": (0.0, 0.0), "b": (3.0, 4.0)})
        graph = build_scene_graph(scene, 0, d=4.99)
        assert not graph.has_edge("a", "b")
        assert len(graph.edges) == 0

    def test_square_matches_bruteforce(self, square_scene):
        # Oracle: threshold every pair directly.
        graph = build_scene_graph(square_scene, 0, d=10.0)
        pos = {a: square_scene.track(a).state_at(0).position for a in square_scene.agent_ids()}
        expected = {
            frozenset((a, b))
            for a, b in itertools.combinations(pos, 2)
            if np.linalg.norm(pos[a] - pos[b]) <= 10.0
        }
        assert graph.edges == frozenset(expected)
        assert len(graph.edges) == 4  # sides only; diagonal is 10*sqrt(2)
        assert not graph.has_edge("a", "c")
        assert not graph.has_edge("b", "d")

    def test_unknown_timestep_raises_empty_scene(self, square_scene):
        with pytest.raises(EmptySceneError):
            build_scene_graph(square_scene, 99, d=10.0)

    def test_nonpositive_threshold_rejected(self, square_scene):
        with pytest.raises(InvalidParameterError):
            build_scene_graph(square_scene, 0, d=0.0)

    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=-50, max_value=50),
                st.floats(min_value=-50, max_value=50),
            ),
            min_size=2,
            max_size=6,
        ),
        st.floats(min_value=0.5, max_value=40.0),
        st.floats(min_value=0.0, max_value=30.0),
    )
    def test_properties(self, points, d, extra):
        scene = make_static_scene({f"a{i}": p for i, p in enumerate(points)})
        graph = build_scene_graph(scene, 0, d=d)
        # Symmetry.
        for a in scene.agent_ids():
            for b in graph.neighbors(a):
                assert a in graph.neighbors(b)
        # Monotonicity in the threshold.
        larger = build_scene_graph(scene, 0, d=d + extra)
        assert graph.edges <= larger.edges
        # Translation invariance.
        shifted = make_static_scene(
            {f"a{i}": (p[0] + 123.0, p[1] - 77.0) for i, p in enumerate(points)}
        )
        assert build_scene_graph(shifted, 0, d=d).edges == graph.edges
