"""Training: enumerated discrete-latent objective with annealed KL weight.

The loss maximized per example is

    E_{z ~ q(z|x,y)}[log p(y | x, z, c)] - beta * KL(q(z|x,y) || p(z|x,c)) + I(x; z)

with the expectation over the categorical latent enumerated exactly (no
sampling, no relaxation), the KL in closed form, and the mutual-information
term approximated by swapping q for the prior and marginalizing it over the
batch: I = H(mean_i p(z|x_i,c_i)) - mean_i H(p(z|x_i,c_i)). The returned loss
is the negation.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from .data.splits import DatasetSplit, select
from .data.transforms import AugmentationConfig
from .errors import DivergenceError, InvalidParameterError
from .model.batching import ObservationBatch, build_batch, enumerate_instances
from .model.network import TrajectoryForecaster, bivariate_log_pdf
from .scene import Scene


@dataclass(frozen=True)
class BetaSchedule:
    """Increasing-sigmoid interpolation for the KL weight."""

    start: float = 1e-2
    end: float = 1.0
    midpoint: Optional[float] = None  # iteration; None -> 25% of planned iterations
    steepness: float = 0.01  # per iteration

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise InvalidParameterError("beta schedule must satisfy 0 <= start <= end")
        if self.steepness <= 0:
            raise InvalidParameterError("beta steepness must be positive")

    def resolved(self, total_iterations: int) -> "BetaSchedule":
        if self.midpoint is not None:
            return self
        return BetaSchedule(self.start, self.end, 0.25 * total_iterations, self.steepness)


def beta_at(iteration: int, schedule: BetaSchedule) -> float:
    """KL weight at a training iteration; non-decreasing, start -> end."""
    if iteration < 0:
        raise InvalidParameterError(f"iteration must be >= 0, got {iteration}")
    if schedule.midpoint is None:
        raise InvalidParameterError("schedule midpoint unresolved; call schedule.resolved(...)")
    s = 1.0 / (1.0 + math.exp(-schedule.steepness * (iteration - schedule.midpoint)))
    return schedule.start + (schedule.end - schedule.start) * s


@dataclass
class TrainingConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    beta: BetaSchedule = field(default_factory=BetaSchedule)
    mi_weight: float = 1.0
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    anchor_stride: int = 1  # keep every n-th eligible anchor timestep
    grad_clip: float = 5.0  # max gradient norm; 0 disables clipping
    lr_decay_factor: float = 0.3
    lr_decay_at: Tuple[float, float] = (0.6, 0.85)  # fractions of max_epochs

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise InvalidParameterError("bad optimizer settings")
        if self.patience < 1 or self.anchor_stride < 1:
            raise InvalidParameterError("patience and anchor_stride must be >= 1")
        if self.grad_clip < 0 or not 0 < self.lr_decay_factor <= 1:
            raise InvalidParameterError("bad grad_clip or lr_decay_factor")


def elbo_loss(
    model: TrajectoryForecaster,
    batch: ObservationBatch,
    beta: float = 1.0,
    mi_weight: float = 1.0,
) -> Tuple[torch.Tensor, Dict[str, float]]:
    """Negated objective and its term breakdown (means over the batch).

    Breakdown keys: ``reconstruction`` E_q[log p(y|x,z,c)], ``kl``
    KL(q || p) >= 0, and ``mutual_information`` in [0, ln Z].
    """
    if batch.y is None:
        raise InvalidParameterError("elbo_loss needs ground-truth futures in the batch")
    log_py_z, prior_logits, e_x = model.log_likelihood_per_mode(batch)
    post_logits = model.posterior_logits(e_x, batch)

    log_q = torch.log_softmax(post_logits, dim=-1)
    log_p = torch.log_softmax(prior_logits, dim=-1)
    q = torch.exp(log_q)
    p = torch.exp(log_p)

    reconstruction = (q * log_py_z).sum(dim=-1).mean()
    kl = (q * (log_q - log_p)).sum(dim=-1).mean()

    marginal = p.mean(dim=0)
    h_marginal = -(marginal * torch.log(marginal)).sum()
    h_conditional = -(p * log_p).sum(dim=-1).mean()
    mutual_information = h_marginal - h_conditional

    loss = -(reconstruction - beta * kl + mi_weight * mutual_information)
    breakdown = {
        "reconstruction": float(reconstruction.detach()),
        "kl": float(kl.detach()),
        "mutual_information": float(mutual_information.detach()),
        "beta": float(beta),
    }
    return loss, breakdown


def _batch_anll_ade(model: TrajectoryForecaster, batch: ObservationBatch) -> Tuple[float, float]:
    """Mean per-step mixture NLL and most-likely ADE over a validation batch."""
    with torch.no_grad():
        dist = model.distribution_tensors(batch, horizon=batch.y.shape[1])
        y = torch.as_tensor(batch.y, dtype=dist["means"].dtype)
        logp_t = bivariate_log_pdf(y[:, None, :, :], dist["means"], dist["covs"])  # (B,C,T)
        log_w = torch.log(torch.clamp(dist["weights"], min=1e-30))
        mix = torch.logsumexp(logp_t + log_w[..., None], dim=1)  # (B,T)
        anll = float(-mix.mean())
        best = dist["weights"].argmax(dim=-1)
        idx = best.view(-1, 1, 1, 1).expand(-1, 1, dist["means"].shape[2], 2)
        ml = dist["means"].gather(1, idx).squeeze(1)
        ade = float(torch.linalg.norm(ml - y, dim=-1).mean())
    return anll, ade


@dataclass
class TrainingResult:
    model: TrajectoryForecaster
    curve: List[dict]
    best_epoch: int
    best_val_anll: float


def _strided(instances, stride: int):
    if stride <= 1:
        return list(instances)
    return [inst for i, inst in enumerate(instances) if i % stride == 0]


def train(
    model: TrajectoryForecaster,
    scenes: Sequence[Scene],
    split: DatasetSplit,
    config: TrainingConfig,
    log_fn=None,
) -> TrainingResult:
    """Optimize the model; early-stops on validation ANLL, returns the best weights.

    Deterministic given config.seed. Per-batch rotation augmentation draws one
    angle from the configured grid and rotates all kinematic quantities.
    """
    train_scenes = select(scenes, split.train)
    val_scenes = select(scenes, split.val)
    if not train_scenes or not val_scenes:
        raise InvalidParameterError("train and val splits must both be non-empty")

    cfg = model.config
    train_instances = _strided(enumerate_instances(train_scenes, cfg), config.anchor_stride)
    val_instances = _strided(enumerate_instances(val_scenes, cfg), config.anchor_stride)
    if not train_instances or not val_instances:
        raise InvalidParameterError("no eligible training or validation instances")

    train_batch_all = build_batch(train_scenes, train_instances, cfg)
    val_batch_all = build_batch(val_scenes, val_instances, cfg)

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    n = len(train_instances)
    batches_per_epoch = max(1, math.ceil(n / config.batch_size))
    schedule = config.beta.resolved(batches_per_epoch * config.max_epochs)
    angles = config.augmentation.angles()

    curve: List[dict] = []
    best_state = copy.deepcopy(model.state_dict())
    best_anll = math.inf
    best_epoch = -1
    iteration = 0
    stall = 0
    decay_epochs = {int(frac * config.max_epochs) for frac in config.lr_decay_at}
    for epoch in range(config.max_epochs):
        if epoch in decay_epochs:
            for group in optimizer.param_groups:
                group["lr"] *= config.lr_decay_factor
        model.train()
        order = rng.permutation(n)
        epoch_loss = 0.0
        beta = beta_at(iteration, schedule)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            minibatch = train_batch_all.subset(idx)
            if config.augmentation.enabled:
                gamma = float(rng.choice(angles))
                if gamma != 0.0:
                    minibatch = minibatch.rotated(gamma)
            beta = beta_at(iteration, schedule)
            loss, _ = elbo_loss(model, minibatch, beta=beta, mi_weight=config.mi_weight)
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch starting at instance {start}"
                )
            optimizer.zero_grad()
            loss.backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(idx)
            iteration += 1

        model.eval()
        val_anll, val_ade = _batch_anll_ade(model, val_batch_all)
        entry = {
            "epoch": epoch,
            "train_loss": epoch_loss / n,
            "val_ade": val_ade,
            "val_anll": val_anll,
            "beta": beta,
        }
        curve.append(entry)
        if log_fn is not None:
            log_fn(entry)
        if val_anll < best_anll:
            best_anll = val_anll
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break

    model.load_state_dict(best_state)
    model.eval()
    return TrainingResult(model=model, curve=curve, best_epoch=best_epoch, best_val_anll=best_anll)
