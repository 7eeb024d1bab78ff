import numpy as np
import pytest
import torch

from haicu.data import ClassMotionSpec, GeneratorConfig, PerceptionNoiseModel, generate_synthetic
from haicu.errors import CheckpointError, InvalidParameterError
from haicu.model import (
    ModelConfig,
    build_batch,
    build_model,
    count_flops,
    count_parameters,
    enumerate_instances,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from haicu.model.distribution import TrajectoryDistribution
from conftest import final_linear

TINY = ModelConfig(
    num_classes=3,
    history_steps=5,
    prediction_steps=6,
    node_hidden=12,
    edge_hidden=4,
    future_hidden=8,
    decoder_hidden=24,
    latent_modes=4,
    edge_distance=15.0,
)


def _scenes(seed=0, n_scenes=3, one_hot=False):
    specs = (
        ClassMotionSpec("car", (3.0, 6.0), heading_noise_std=0.02),
        ClassMotionSpec("bicycle", (1.5, 3.5), heading_noise_std=0.1),
        ClassMotionSpec("pedestrian", (0.5, 1.5), heading_noise_std=0.35),
    )
    config = GeneratorConfig(
        class_specs=specs,
        class_weights=(1, 1, 1),
        n_scenes=n_scenes,
        agents_per_scene=(3, 4),
        scene_length=20,
        area=8.0,
    )
    if one_hot:
        noise = PerceptionNoiseModel.identity(3)
    else:
        noise = PerceptionNoiseModel(
            confusion=np.array([[0.6, 0.25, 0.15], [0.2, 0.6, 0.2], [0.15, 0.25, 0.6]]),
            concentration=10.0,
            switch_rate=0.05,
        )
    return generate_synthetic(config, noise, seed=seed)


def _batch(scenes, cfg, limit=12):
    instances = enumerate_instances(scenes, cfg)
    return build_batch(scenes, instances[:limit], cfg)


class TestEncode:
    def test_no_neighbors_uses_zero_sequence_response(self):
        scenes = _scenes()
        # An isolated agent: shrink the interaction radius to zero neighbors.
        cfg = ModelConfig(**{**TINY.to_dict(), "edge_distance": 1e-6})
        model = build_model(cfg, seed=0)
        batch = _batch(scenes, cfg, limit=4)
        assert batch.neighbor_feats.shape[1] == 0
        e_x = model.encode(batch)
        zeros = torch.zeros(len(batch), cfg.history_steps + 1, cfg.input_dim)
        expected_edge = model.edge_encoder(zeros, mask=None)
        torch.testing.assert_close(e_x[:, cfg.node_hidden :], expected_edge)

    def test_neighbor_permutation_invariance(self):
        scenes = _scenes()
        model = build_model(TINY, seed=0)
        batch = _batch(scenes, TINY)
        rows_with_neighbors = [
            i for i in range(len(batch)) if len(batch.neighbor_ids[i]) >= 2
        ]
        assert rows_with_neighbors, "fixture needs at least one multi-neighbor row"
        e_before = model.encode(batch).detach()
        perm_batch = batch.subset(range(len(batch)))
        for i in rows_with_neighbors:
            n = len(perm_batch.neighbor_ids[i])
            order = list(reversed(range(n)))
            perm_batch.neighbor_feats[i, :n] = perm_batch.neighbor_feats[i, order]
            perm_batch.neighbor_step_mask[i, :n] = perm_batch.neighbor_step_mask[i, order]
            perm_batch.neighbor_ids[i] = [perm_batch.neighbor_ids[i][j] for j in order]
        e_after = model.encode(perm_batch).detach()
        assert torch.equal(e_before, e_after)

    def test_one_hot_variant_equals_full_probs_on_one_hot_data(self):
        scenes = _scenes(one_hot=True)
        full = build_model(TINY, seed=3)
        batch = _batch(scenes, TINY)
        e_full = full.encode(batch).detach()
        one_hot_cfg = ModelConfig(**{**TINY.to_dict(), "variant": "one_hot"})
        quantized = build_model(one_hot_cfg, seed=99)
        quantized.load_state_dict(full.state_dict())  # identical weights
        e_onehot = quantized.encode(batch).detach()
        assert torch.equal(e_full, e_onehot)
        d_full = predict(full, batch)
        d_onehot = predict(quantized, batch)
        for a, b in zip(d_full, d_onehot):
            np.testing.assert_array_equal(a.weights, b.weights)
            np.testing.assert_array_equal(a.means, b.means)


class TestPredict:
    def test_prior_weights_normalized_and_covs_psd(self):
        scenes = _scenes()
        model = build_model(TINY, seed=1)
        batch = _batch(scenes, TINY)
        for dist in predict(model, batch):
            assert abs(dist.weights.sum() - 1.0) <= 1e-6
            eigs = np.linalg.eigvalsh(dist.covs)
            assert eigs.min() >= TINY.cov_floor * 0.99

    def test_forced_degenerate_mixture_returns_mode_zero(self):
        scenes = _scenes()
        model = build_model(TINY, seed=2)
        with torch.no_grad():
            _pl = final_linear(model.prior_head)
            _pl.weight.zero_()
            _pl.bias.copy_(
                torch.tensor([60.0] + [0.0] * (TINY.latent_modes - 1))
            )
        batch = _batch(scenes, TINY, limit=3)
        dists = predict(model, batch)
        ml = model.most_likely(batch)
        for i, dist in enumerate(dists):
            assert np.argmax(dist.weights) == 0
            np.testing.assert_array_equal(ml[i], dist.means[0])

    def test_sampled_moments_match_analytic_mixture(self):
        scenes = _scenes()
        model = build_model(TINY, seed=4)
        batch = _batch(scenes, TINY, limit=2)
        dists = predict(model, batch)
        samples = model.sample(batch, 100_000, seed=0)  # (B, n, T, 2)
        for i, dist in enumerate(dists):
            mean, cov = dist.step_moments()
            emp_mean = samples[i].mean(axis=0)
            rel_mean = np.linalg.norm(emp_mean - mean) / max(np.linalg.norm(mean), 1e-9)
            assert rel_mean < 0.03
            for t in range(dist.horizon):
                emp_cov = np.cov(samples[i, :, t, :].T)
                rel = np.linalg.norm(emp_cov - cov[t]) / np.linalg.norm(cov[t])
                assert rel < 0.03

    def test_sampling_is_seeded(self):
        scenes = _scenes()
        model = build_model(TINY, seed=5)
        batch = _batch(scenes, TINY, limit=3)
        a = model.sample(batch, 7, seed=11)
        b = model.sample(batch, 7, seed=11)
        np.testing.assert_array_equal(a, b)
        c = model.sample(batch, 7, seed=12)
        assert not np.array_equal(a, c)

    def test_longer_horizon_decoding(self):
        scenes = _scenes()
        model = build_model(TINY, seed=6)
        batch = _batch(scenes, TINY, limit=2)
        dists = predict(model, batch, horizon=TINY.prediction_steps + 10)
        assert dists[0].horizon == TINY.prediction_steps + 10


class TestMultiHead:
    CFG = ModelConfig(
        num_classes=3,
        history_steps=5,
        prediction_steps=6,
        node_hidden=12,
        edge_hidden=4,
        future_hidden=8,
        decoder_hidden=24,
        latent_modes=4,
        variant="multi_head",
        vehicle_classes=(0,),
        edge_distance=15.0,
    )

    def test_component_count_is_z_times_k(self):
        scenes = _scenes()
        model = build_model(self.CFG, seed=0)
        batch = _batch(scenes, self.CFG, limit=3)
        dists = predict(model, batch)
        assert dists[0].n_components == self.CFG.latent_modes * self.CFG.num_classes

    def test_one_hot_probability_collapses_to_single_head(self):
        scenes = _scenes(one_hot=True)
        model = build_model(self.CFG, seed=1)
        batch = _batch(scenes, self.CFG, limit=6)
        k = self.CFG.num_classes
        dists = predict(model, batch)
        for i, dist in enumerate(dists):
            cls = int(np.argmax(batch.c_hat[i, -1]))
            head_of_comp = np.arange(dist.n_components) % k
            np.testing.assert_allclose(dist.weights[head_of_comp != cls], 0.0, atol=1e-9)
            assert abs(dist.weights[head_of_comp == cls].sum() - 1.0) <= 1e-6

    def test_weights_still_normalized(self):
        scenes = _scenes()
        model = build_model(self.CFG, seed=2)
        batch = _batch(scenes, self.CFG, limit=5)
        for dist in predict(model, batch):
            assert abs(dist.weights.sum() - 1.0) <= 1e-6
            eigs = np.linalg.eigvalsh(dist.covs)
            assert eigs.min() >= 0.0


class TestComplexity:
    PAPER_DIMS = ModelConfig(num_classes=11)

    def test_parameter_count_in_reference_bracket(self):
        model = build_model(self.PAPER_DIMS, seed=0)
        n = count_parameters(model)
        assert 0.8 * 117_389 <= n <= 1.5 * 117_389, n

    def test_doubling_decoder_hidden_increases_count(self):
        small = count_parameters(build_model(self.PAPER_DIMS, seed=0))
        big_cfg = ModelConfig(**{**self.PAPER_DIMS.to_dict(), "decoder_hidden": 256})
        big = count_parameters(build_model(big_cfg, seed=0))
        assert big > small

    def test_flops_linear_in_node_count(self):
        cfg = self.PAPER_DIMS
        f1 = count_flops(cfg, n_nodes=1, n_edges=40)
        f10 = count_flops(cfg, n_nodes=10, n_edges=40)
        f75 = count_flops(cfg, n_nodes=75, n_edges=40)
        slope = (f10 - f1) / 9
        assert abs((f75 - f1) / 74 - slope) / slope < 1e-9
        assert f75 > f10 > f1


class TestCheckpoint:
    def test_round_trip_preserves_outputs(self, tmp_path):
        scenes = _scenes()
        model = build_model(TINY, seed=7)
        batch = _batch(scenes, TINY, limit=3)
        before = predict(model, batch)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, model, metadata={"seed": 7, "epoch": 0})
        loaded, meta = load_checkpoint(path)
        assert meta["seed"] == 7
        assert "checkpoint_id" in meta
        after = predict(loaded, batch)
        for a, b in zip(before, after):
            np.testing.assert_array_equal(a.means, b.means)
            np.testing.assert_array_equal(a.weights, b.weights)

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.ckpt")

    def test_corrupt_checkpoint(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"not a zip")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestDistributionValidation:
    def test_rejects_unnormalized_weights(self):
        with pytest.raises(InvalidParameterError):
            TrajectoryDistribution(
                weights=np.array([0.5, 0.6]),
                means=np.zeros((2, 3, 2)),
                covs=np.tile(np.eye(2), (2, 3, 1, 1)),
                control_means=np.zeros((2, 3, 2)),
                control_covs=np.tile(np.eye(2), (2, 3, 1, 1)),
                dt=0.1,
            )
