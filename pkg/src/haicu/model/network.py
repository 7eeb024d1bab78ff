"""Forecasting network: recurrent encoders, discrete latent, GRU control decoder.

The per-agent history (state ++ class-prob vectors) feeds a masked LSTM; the
element-wise sum of neighbor (state ++ class-prob) sequences feeds a second
LSTM; their final hidden states concatenate into the representation e_x. A
categorical latent of ``latent_modes`` categories sits between e_x and a GRU
decoder that emits one bivariate Gaussian over control actions per step.
Controls are integrated into position-space Gaussians in closed form.

Variants:

* ``full_probs`` — class-probability vectors enter the encoders as-is.
* ``one_hot`` — probability rows are argmax-quantized before encoding.
* ``multi_head`` — the shared encoders see states only; one decoder head per
  class, mixed by the current-timestep class probabilities (vehicle-class
  heads integrate unicycle dynamics, the rest single-integrator).
"""
from __future__ import annotations

import math
from typing import Dict, Optional, Tuple

import numpy as np
import torch
from torch import nn

from ..errors import InvalidParameterError
from .batching import ObservationBatch
from .config import ModelConfig
from .dynamics import integrate_single_integrator, pose_from_state, unicycle_integrate

LOG_2PI = math.log(2.0 * math.pi)


def bivariate_log_pdf(x: torch.Tensor, mean: torch.Tensor, cov: torch.Tensor) -> torch.Tensor:
    """Log density of (..., 2) points under (..., 2) means and (..., 2, 2) covariances."""
    dx = x - mean
    a = cov[..., 0, 0]
    b = cov[..., 0, 1]
    d = cov[..., 1, 1]
    det = a * d - b * b
    quad = (d * dx[..., 0] ** 2 - 2.0 * b * dx[..., 0] * dx[..., 1] + a * dx[..., 1] ** 2) / det
    return -LOG_2PI - 0.5 * torch.log(det) - 0.5 * quad


class MaskedLSTM(nn.Module):
    """LSTM over (B, L, F) sequences that freezes its state on masked steps.

    With front-padded histories this equals running the cell over just the
    valid suffix. mask=None runs the full sequence (used by the edge encoder,
    whose all-zero rows are meaningful "no neighbor" input).
    """

    def __init__(self, input_dim: int, hidden_dim: int):
        super().__init__()
        self.cell = nn.LSTMCell(input_dim, hidden_dim)
        self.hidden_dim = hidden_dim

    def forward(self, seq: torch.Tensor, mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        batch = seq.shape[0]
        h = seq.new_zeros(batch, self.hidden_dim)
        c = seq.new_zeros(batch, self.hidden_dim)
        for t in range(seq.shape[1]):
            h_new, c_new = self.cell(seq[:, t, :], (h, c))
            if mask is not None:
                keep = mask[:, t].unsqueeze(-1)
                h = torch.where(keep, h_new, h)
                c = torch.where(keep, c_new, c)
            else:
                h, c = h_new, c_new
        return h


def _latent_head(input_dim: int, z: int, hidden: int) -> nn.Module:
    """Logit head over the latent categories; optionally one tanh layer deep."""
    if hidden <= 0:
        return nn.Linear(input_dim, z)
    return nn.Sequential(nn.Linear(input_dim, hidden), nn.Tanh(), nn.Linear(hidden, z))


class _DecoderHead(nn.Module):
    """GRU decoder emitting per-step bivariate control Gaussians."""

    def __init__(self, context_dim: int, hidden_dim: int):
        super().__init__()
        self.init = nn.Linear(context_dim, hidden_dim)
        self.cell = nn.GRUCell(context_dim + 2, hidden_dim)
        self.out = nn.Linear(hidden_dim, 5)

    def forward(self, context: torch.Tensor, u0: torch.Tensor, horizon: int):
        """Unroll ``horizon`` steps from context (B', ctx) and initial control u0 (B', 2).

        Returns control means (B', T, 2) and covariances (B', T, 2, 2). The
        recurrence feeds back the previous step's mean control.
        """
        h = torch.tanh(self.init(context))
        u_prev = u0
        means = []
        covs = []
        for _ in range(horizon):
            h = self.cell(torch.cat([context, u_prev], dim=-1), h)
            raw = self.out(h)
            mu = raw[..., 0:2]
            sig = torch.exp(torch.clamp(raw[..., 2:4], min=-8.0, max=6.0))
            rho = torch.tanh(raw[..., 4])
            sx, sy = sig[..., 0], sig[..., 1]
            off = rho * sx * sy
            cov = torch.stack(
                [
                    torch.stack([sx * sx, off], dim=-1),
                    torch.stack([off, sy * sy], dim=-1),
                ],
                dim=-2,
            )
            means.append(mu)
            covs.append(cov)
            u_prev = mu
        return torch.stack(means, dim=-2), torch.stack(covs, dim=-3)


class TrajectoryForecaster(nn.Module):
    """Class-probability-conditioned multimodal trajectory forecaster."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        in_dim = config.input_dim
        self.node_encoder = MaskedLSTM(in_dim, config.node_hidden)
        self.edge_encoder = MaskedLSTM(in_dim, config.edge_hidden)
        self.future_encoder = nn.LSTM(
            2, config.future_hidden, bidirectional=True, batch_first=True
        )
        e_dim = config.embedding_dim
        z = config.latent_modes
        self.prior_head = _latent_head(e_dim, z, config.head_hidden)
        self.posterior_head = _latent_head(e_dim + 2 * config.future_hidden, z, config.head_hidden)
        n_heads = config.num_classes if config.variant == "multi_head" else 1
        self.decoder_heads = nn.ModuleList(
            _DecoderHead(e_dim + z, config.decoder_hidden) for _ in range(n_heads)
        )

    # ----- input handling -------------------------------------------------

    def _tensor(self, arr: np.ndarray) -> torch.Tensor:
        p = next(self.parameters())
        return torch.as_tensor(arr, dtype=p.dtype, device=p.device)

    def _prob_block(self, probs: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
        """Apply the variant's treatment of probability rows (zero where invalid)."""
        if self.config.variant == "one_hot":
            onehot = nn.functional.one_hot(
                probs.argmax(dim=-1), num_classes=self.config.num_classes
            ).to(probs.dtype)
            return onehot * valid.unsqueeze(-1)
        return probs * valid.unsqueeze(-1)

    def _normalize_states(
        self, states: torch.Tensor, origin: torch.Tensor, valid: torch.Tensor
    ) -> torch.Tensor:
        """Agent-relative positions plus fixed per-block scaling.

        Keeps kinematic magnitudes comparable to the [0, 1] probability
        features; invalid (masked) steps stay exactly zero.
        """
        ps, vs, as_ = self.config.input_scales
        rel_pos = (states[..., 0:2] - origin) / ps
        out = torch.cat([rel_pos, states[..., 2:4] / vs, states[..., 4:6] / as_], dim=-1)
        return out * valid.unsqueeze(-1)

    def encode(self, batch: ObservationBatch) -> torch.Tensor:
        """Produce e_x (B, node_hidden + edge_hidden) for a batch."""
        x = self._tensor(batch.x)
        mask = torch.as_tensor(batch.mask, device=x.device)
        if not torch.all(torch.isfinite(x)):
            raise InvalidParameterError("batch states contain non-finite values")
        origin = x[:, -1, 0:2]  # encoder inputs are relative to the agent "now"
        x_n = self._normalize_states(x, origin.unsqueeze(1), mask)
        if self.config.variant == "multi_head":
            node_in = x_n
        else:
            probs = self._prob_block(self._tensor(batch.c_hat), mask)
            node_in = torch.cat([x_n, probs], dim=-1)
        h_node = self.node_encoder(node_in, mask)

        nf = self._tensor(batch.neighbor_feats)
        n_mask = torch.as_tensor(batch.neighbor_step_mask, device=x.device)
        d = self.config.state_dim
        states = self._normalize_states(nf[..., :d], origin[:, None, None, :], n_mask)
        if self.config.variant == "multi_head":
            edge_feats = states
        else:
            nprobs = self._prob_block(nf[..., d:], n_mask)
            edge_feats = torch.cat([states, nprobs], dim=-1)
        edge_in = edge_feats.sum(dim=1)  # sum over neighbors; empty -> zeros
        h_edge = self.edge_encoder(edge_in, mask=None)
        return torch.cat([h_node, h_edge], dim=-1)

    # ----- latent ----------------------------------------------------------

    def prior_logits(self, e_x: torch.Tensor) -> torch.Tensor:
        return self.prior_head(e_x)

    def posterior_logits(self, e_x: torch.Tensor, batch: ObservationBatch) -> torch.Tensor:
        if batch.y is None:
            raise InvalidParameterError("posterior needs ground-truth futures")
        y_t = self._tensor(batch.y)
        origin = self._tensor(batch.current_state())[:, 0:2]
        y_t = (y_t - origin.unsqueeze(1)) / self.config.input_scales[0]
        _, (h_n, _) = self.future_encoder(y_t)
        e_y = torch.cat([h_n[0], h_n[1]], dim=-1)
        return self.posterior_head(torch.cat([e_x, e_y], dim=-1))

    # ----- decoding ---------------------------------------------------------

    def decode_controls(
        self, e_x: torch.Tensor, batch: ObservationBatch, horizon: Optional[int] = None
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Per-latent-mode control Gaussians.

        Returns (means, covs) shaped (B, Z, T, 2) / (B, Z, T, 2, 2) for the
        single-head variants and (B, Z, K, T, ...) for multi_head.
        """
        horizon = horizon or self.config.prediction_steps
        b = e_x.shape[0]
        z = self.config.latent_modes
        z_eye = torch.eye(z, dtype=e_x.dtype, device=e_x.device)
        ctx = torch.cat(
            [e_x.unsqueeze(1).expand(b, z, -1), z_eye.unsqueeze(0).expand(b, z, z)], dim=-1
        ).reshape(b * z, -1)
        current = self._tensor(batch.current_state())

        means_per_head = []
        covs_per_head = []
        for head_idx, head in enumerate(self.decoder_heads):
            if self.config.variant == "multi_head" and head_idx in self.config.vehicle_classes:
                u0 = torch.zeros(b, 2, dtype=e_x.dtype, device=e_x.device)
            else:
                u0 = current[:, 2:4]
            u0 = u0.unsqueeze(1).expand(b, z, 2).reshape(b * z, 2)
            mu, cov = head(ctx, u0, horizon)
            means_per_head.append(mu.reshape(b, z, horizon, 2))
            covs_per_head.append(cov.reshape(b, z, horizon, 2, 2))
        if self.config.variant != "multi_head":
            return means_per_head[0], covs_per_head[0]
        return torch.stack(means_per_head, dim=2), torch.stack(covs_per_head, dim=2)

    def _integrate(
        self, batch: ObservationBatch, ctrl_mean: torch.Tensor, ctrl_cov: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Integrate control Gaussians into floored position Gaussians."""
        current = self._tensor(batch.current_state())
        dt = batch.dt
        floor = self.config.cov_floor * torch.eye(2, dtype=ctrl_mean.dtype, device=ctrl_mean.device)
        if self.config.variant != "multi_head":
            p0 = current[:, 0:2].unsqueeze(1).expand(-1, self.config.latent_modes, -1)
            pos_mean, pos_cov = integrate_single_integrator(ctrl_mean, ctrl_cov, p0, dt)
            return pos_mean, pos_cov + floor

        b, z, k, horizon, _ = ctrl_mean.shape
        pose = pose_from_state(current)  # (B, 4)
        means = []
        covs = []
        for head_idx in range(k):
            m = ctrl_mean[:, :, head_idx]
            c = ctrl_cov[:, :, head_idx]
            if head_idx in self.config.vehicle_classes:
                pose_z = pose.unsqueeze(1).expand(b, z, 4)
                pm, pc = unicycle_integrate(m, c, pose_z, dt)
            else:
                p0 = current[:, 0:2].unsqueeze(1).expand(b, z, 2)
                pm, pc = integrate_single_integrator(m, c, p0, dt)
            means.append(pm)
            covs.append(pc + floor)
        return torch.stack(means, dim=2), torch.stack(covs, dim=2)

    # ----- full predictive distribution --------------------------------------

    def distribution_tensors(
        self, batch: ObservationBatch, horizon: Optional[int] = None
    ) -> Dict[str, torch.Tensor]:
        """Mixture components of p(future | history, class probs).

        Component weights come from the latent prior; multi_head additionally
        factors in the current-timestep class probabilities, giving Z*K
        components. Shapes: weights (B, C), means (B, C, T, 2),
        covs (B, C, T, 2, 2), plus the underlying control Gaussians.
        """
        e_x = self.encode(batch)
        pi = torch.softmax(self.prior_logits(e_x), dim=-1)
        ctrl_mean, ctrl_cov = self.decode_controls(e_x, batch, horizon)
        pos_mean, pos_cov = self._integrate(batch, ctrl_mean, ctrl_cov)
        if self.config.variant == "multi_head":
            c_now = self._tensor(batch.c_hat)[:, -1, :]
            weights = pi.unsqueeze(-1) * c_now.unsqueeze(1)  # (B, Z, K)
            b, z, k = weights.shape
            horizon_n = pos_mean.shape[3]
            return {
                "weights": weights.reshape(b, z * k),
                "means": pos_mean.reshape(b, z * k, horizon_n, 2),
                "covs": pos_cov.reshape(b, z * k, horizon_n, 2, 2),
                "control_means": ctrl_mean.reshape(b, z * k, horizon_n, 2),
                "control_covs": ctrl_cov.reshape(b, z * k, horizon_n, 2, 2),
                "mode_ids": torch.arange(z, device=pi.device).repeat_interleave(k),
            }
        return {
            "weights": pi,
            "means": pos_mean,
            "covs": pos_cov,
            "control_means": ctrl_mean,
            "control_covs": ctrl_cov,
            "mode_ids": torch.arange(self.config.latent_modes, device=pi.device),
        }

    def log_likelihood_per_mode(
        self, batch: ObservationBatch, horizon: Optional[int] = None
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(log p(y | x, z) per latent mode, prior logits, e_x) for training.

        For multi_head the per-mode likelihood marginalizes the class heads
        with the current-timestep probabilities as mixing weights.
        """
        if batch.y is None:
            raise InvalidParameterError("batch has no ground-truth futures")
        e_x = self.encode(batch)
        ctrl_mean, ctrl_cov = self.decode_controls(e_x, batch, horizon=batch.y.shape[1])
        pos_mean, pos_cov = self._integrate(batch, ctrl_mean, ctrl_cov)
        y = self._tensor(batch.y)
        if self.config.variant == "multi_head":
            logp_t = bivariate_log_pdf(y[:, None, None, :, :], pos_mean, pos_cov)  # (B,Z,K,T)
            per_head = logp_t.sum(dim=-1)
            c_now = self._tensor(batch.c_hat)[:, -1, :]
            log_c = torch.log(torch.clamp(c_now, min=1e-30)).unsqueeze(1)
            log_py_z = torch.logsumexp(per_head + log_c, dim=-1)  # (B, Z)
        else:
            logp_t = bivariate_log_pdf(y[:, None, :, :], pos_mean, pos_cov)  # (B,Z,T)
            log_py_z = logp_t.sum(dim=-1)
        return log_py_z, self.prior_logits(e_x), e_x

    # ----- point predictions and sampling ------------------------------------

    @torch.no_grad()
    def most_likely(self, batch: ObservationBatch, horizon: Optional[int] = None) -> np.ndarray:
        """Mean trajectory of the highest-weight mixture component, (B, T, 2)."""
        dist = self.distribution_tensors(batch, horizon)
        best = dist["weights"].argmax(dim=-1)
        idx = best.view(-1, 1, 1, 1).expand(-1, 1, dist["means"].shape[2], 2)
        return dist["means"].gather(1, idx).squeeze(1).cpu().numpy()

    @torch.no_grad()
    def sample(
        self,
        batch: ObservationBatch,
        n_samples: int,
        horizon: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> np.ndarray:
        """Ancestral samples (B, n, T, 2): component ~ weights, then per-step
        controls from that component's Gaussians, then dynamics integration."""
        if n_samples < 1:
            raise InvalidParameterError(f"n_samples must be >= 1, got {n_samples}")
        dist = self.distribution_tensors(batch, horizon)
        gen = torch.Generator(device="cpu")
        if seed is not None:
            gen.manual_seed(int(seed))
        weights = dist["weights"].cpu()
        b, c = weights.shape
        comp = torch.multinomial(weights, n_samples, replacement=True, generator=gen)  # (B, n)

        ctrl_mean = dist["control_means"].cpu()
        ctrl_cov = dist["control_covs"].cpu()
        horizon_n = ctrl_mean.shape[2]
        mu = ctrl_mean.gather(1, comp.view(b, n_samples, 1, 1).expand(b, n_samples, horizon_n, 2))
        cov = ctrl_cov.gather(
            1, comp.view(b, n_samples, 1, 1, 1).expand(b, n_samples, horizon_n, 2, 2)
        )
        # Closed-form Cholesky of 2x2 SPD matrices.
        a = torch.clamp(cov[..., 0, 0], min=1e-30)
        l11 = torch.sqrt(a)
        l21 = cov[..., 1, 0] / l11
        l22 = torch.sqrt(torch.clamp(cov[..., 1, 1] - l21 * l21, min=1e-30))
        eps = torch.randn(b, n_samples, horizon_n, 2, generator=gen, dtype=mu.dtype)
        u = torch.empty_like(eps)
        u[..., 0] = mu[..., 0] + l11 * eps[..., 0]
        u[..., 1] = mu[..., 1] + l21 * eps[..., 0] + l22 * eps[..., 1]

        current = torch.as_tensor(batch.current_state(), dtype=mu.dtype)
        if self.config.variant != "multi_head":
            p0 = current[:, 0:2].view(b, 1, 1, 2)
            pos = p0 + batch.dt * torch.cumsum(u, dim=-2)
            return pos.numpy()
        # Heads alternate fastest in the flattened component axis.
        k = self.config.num_classes
        head_of_comp = comp % k
        pose0 = pose_from_state(current)  # (B, 4)
        pos = torch.empty(b, n_samples, horizon_n, 2, dtype=mu.dtype)
        from .dynamics import _unicycle_step_mean  # local import to keep surface small

        for i in range(b):
            for j in range(n_samples):
                if int(head_of_comp[i, j]) in self.config.vehicle_classes:
                    state = pose0[i]
                    for t in range(horizon_n):
                        state = _unicycle_step_mean(state, u[i, j, t], batch.dt)
                        pos[i, j, t] = state[0:2]
                else:
                    pos[i, j] = current[i, 0:2] + batch.dt * torch.cumsum(u[i, j], dim=0)
        return pos.numpy()


def build_model(config: ModelConfig, seed: Optional[int] = None) -> TrajectoryForecaster:
    """Construct a forecaster, optionally with seeded weight initialization."""
    if seed is not None:
        torch.manual_seed(int(seed))
    return TrajectoryForecaster(config)
