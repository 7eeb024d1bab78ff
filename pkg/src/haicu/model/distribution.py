"""Position-space Gaussian mixtures over predicted trajectories."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.special import logsumexp

from ..errors import InvalidParameterError

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class TrajectoryDistribution:
    """Per-timestep position Gaussians for each mixture component.

    weights (C,) sum to 1; means (C, T, 2) in meters; covs (C, T, 2, 2) in
    m^2, symmetric PSD (an eigenvalue floor is applied at construction time
    upstream). The generating per-step control Gaussians are retained.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    control_means: np.ndarray
    control_covs: np.ndarray
    dt: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.covs = np.asarray(self.covs, dtype=float)
        if abs(self.weights.sum() - 1.0) > 1e-6:
            raise InvalidParameterError(f"mixture weights sum to {self.weights.sum():.8f}")
        if np.any(self.weights < -1e-12):
            raise InvalidParameterError("mixture weights must be non-negative")
        c, t = self.means.shape[0], self.means.shape[1]
        if self.weights.shape != (c,) or self.covs.shape != (c, t, 2, 2):
            raise InvalidParameterError("inconsistent mixture component shapes")

    @property
    def n_components(self) -> int:
        return int(self.weights.size)

    @property
    def horizon(self) -> int:
        return int(self.means.shape[1])

    def most_likely_trajectory(self) -> np.ndarray:
        """Mean trajectory (T, 2) of the highest-weight component."""
        return self.means[int(np.argmax(self.weights))]

    def log_density(self, points: np.ndarray) -> np.ndarray:
        """Per-timestep mixture log density of a (T, 2) trajectory."""
        points = np.asarray(points, dtype=float)
        if points.shape != (self.horizon, 2):
            raise InvalidParameterError(
                f"points shape {points.shape} does not match horizon {self.horizon}"
            )
        logp = gaussian_log_pdf(points[None, :, :], self.means, self.covs)  # (C, T)
        w = np.log(np.clip(self.weights, 1e-300, None))[:, None]
        return logsumexp(logp + w, axis=0)

    def step_moments(self):
        """Mixture mean (T, 2) and covariance (T, 2, 2) at each step."""
        w = self.weights[:, None, None]
        mean = (w * self.means).sum(axis=0)
        diff = self.means - mean[None]
        outer = diff[..., :, None] * diff[..., None, :]
        cov = (w[..., None] * (self.covs + outer)).sum(axis=0)
        return mean, cov

    def entropy_estimate(self, n_samples: int = 256, seed: int = 0) -> float:
        """Monte-Carlo differential entropy of the mixture, averaged over steps.

        Seeded so identical inputs give identical estimates; common random
        numbers make the estimate smooth under small parameter changes.
        """
        rng = np.random.default_rng(seed)
        c, t = self.n_components, self.horizon
        comp = rng.choice(c, size=n_samples, p=np.clip(self.weights, 0, None) / self.weights.sum())
        eps = rng.standard_normal((n_samples, t, 2))
        chol = np.linalg.cholesky(self.covs)  # (C, T, 2, 2)
        samples = self.means[comp] + np.einsum("ntij,ntj->nti", chol[comp], eps)
        logp = gaussian_log_pdf(samples[:, None, :, :], self.means[None], self.covs[None])  # (n, C, T)
        w = np.log(np.clip(self.weights, 1e-300, None))[None, :, None]
        mix = logsumexp(logp + w, axis=1)  # (n, T)
        return float(-mix.mean())


def gaussian_log_pdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Bivariate Gaussian log pdf with broadcasting over leading axes."""
    dx = x - mean
    a = cov[..., 0, 0]
    b = cov[..., 0, 1]
    d = cov[..., 1, 1]
    det = a * d - b * b
    quad = (d * dx[..., 0] ** 2 - 2.0 * b * dx[..., 0] * dx[..., 1] + a * dx[..., 1] ** 2) / det
    return -LOG_2PI - 0.5 * np.log(det) - 0.5 * quad


def distributions_from_tensors(tensors: dict, dt: float) -> List[TrajectoryDistribution]:
    """Split batched model output tensors into per-agent distributions."""
    weights = tensors["weights"].detach().cpu().numpy()
    means = tensors["means"].detach().cpu().numpy()
    covs = tensors["covs"].detach().cpu().numpy()
    cmeans = tensors["control_means"].detach().cpu().numpy()
    ccovs = tensors["control_covs"].detach().cpu().numpy()
    out = []
    for i in range(weights.shape[0]):
        w = weights[i]
        total = w.sum()
        if not np.isfinite(total) or abs(total - 1.0) > 1e-6:
            raise InvalidParameterError(f"component weights sum to {total}")
        out.append(
            TrajectoryDistribution(
                weights=w / total,
                means=means[i],
                covs=covs[i],
                control_means=cmeans[i],
                control_covs=ccovs[i],
                dt=dt,
            )
        )
    return out


def predict(model, batch, horizon: Optional[int] = None) -> List[TrajectoryDistribution]:
    """Full predictive distributions for each batch row."""
    import torch

    with torch.no_grad():
        tensors = model.distribution_tensors(batch, horizon)
    return distributions_from_tensors(tensors, batch.dt)
