"""Evaluation metrics: displacement errors, mixture NLLs, best-of-n sampling,
and a multi-model report with standard errors and significance tests.

Displacement metrics score the single most-likely trajectory; NLL metrics
score the full predictive mixture. One evaluation sample is one
(agent, timestep); standard errors and t-tests are computed over samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats as scipy_stats

from .errors import InvalidParameterError
from .model.batching import build_batch, enumerate_instances
from .model.distribution import TrajectoryDistribution, distributions_from_tensors
from .model.network import TrajectoryForecaster
from .scene import Scene

ALL_CLASSES = "__all__"


def _check_lengths(pred: np.ndarray, gt: np.ndarray, horizon_steps: int) -> None:
    if horizon_steps < 1:
        raise InvalidParameterError(f"horizon_steps must be >= 1, got {horizon_steps}")
    if pred.shape[-2] < horizon_steps or gt.shape[-2] < horizon_steps:
        raise InvalidParameterError(
            f"trajectories cover {pred.shape[-2]}/{gt.shape[-2]} steps, need {horizon_steps}"
        )


def ade(pred_traj, gt_traj, horizon_steps: int) -> float:
    """Mean l2 distance over the first ``horizon_steps`` steps, in meters."""
    pred = np.asarray(pred_traj, dtype=float)
    gt = np.asarray(gt_traj, dtype=float)
    _check_lengths(pred, gt, horizon_steps)
    d = np.linalg.norm(pred[..., :horizon_steps, :] - gt[..., :horizon_steps, :], axis=-1)
    return float(d.mean())


def fde(pred_traj, gt_traj, horizon_steps: int) -> float:
    """l2 distance at step ``horizon_steps``, in meters."""
    pred = np.asarray(pred_traj, dtype=float)
    gt = np.asarray(gt_traj, dtype=float)
    _check_lengths(pred, gt, horizon_steps)
    return float(
        np.linalg.norm(pred[..., horizon_steps - 1, :] - gt[..., horizon_steps - 1, :], axis=-1).mean()
    )


def nll(dist: TrajectoryDistribution, gt_traj, horizon_steps: int, mode: str = "average") -> float:
    """Negative log-likelihood of the ground truth under the predicted mixture.

    ``average`` means over steps 1..horizon; ``final`` evaluates at the
    horizon step only. Nats.
    """
    if mode not in ("average", "final"):
        raise InvalidParameterError(f"mode must be 'average' or 'final', got {mode!r}")
    gt = np.asarray(gt_traj, dtype=float)
    if dist.horizon < horizon_steps or gt.shape[0] < horizon_steps:
        raise InvalidParameterError(
            f"distribution covers {dist.horizon} steps, ground truth {gt.shape[0]}, need {horizon_steps}"
        )
    logd = dist.log_density(gt[: dist.horizon])
    if mode == "average":
        return float(-logd[:horizon_steps].mean())
    return float(-logd[horizon_steps - 1])


def min_ade_fde(
    model: TrajectoryForecaster,
    batch,
    n_samples: int = 20,
    horizon_steps: Optional[int] = None,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Best-of-n sample metrics per batch row.

    Draws ``n_samples`` trajectories and reports, per row, the minimum ADE and
    the minimum FDE across draws (each minimized independently).
    """
    if n_samples < 1:
        raise InvalidParameterError(f"n_samples must be >= 1, got {n_samples}")
    if batch.y is None:
        raise InvalidParameterError("batch has no ground-truth futures")
    horizon_steps = horizon_steps or batch.y.shape[1]
    samples = model.sample(batch, n_samples, horizon=horizon_steps, seed=seed)  # (B,n,T,2)
    gt = np.asarray(batch.y, dtype=float)[:, None, :horizon_steps, :]
    d = np.linalg.norm(samples[:, :, :horizon_steps, :] - gt, axis=-1)  # (B,n,T)
    return d.mean(axis=-1).min(axis=-1), d[..., -1].min(axis=-1)


def two_tailed_t_test(a, b) -> Tuple[float, float]:
    """Unpaired two-tailed Welch t-test; identical degenerate samples give p=1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise InvalidParameterError("t-test needs at least 2 samples per group")
    if np.var(a) == 0.0 and np.var(b) == 0.0:
        return (0.0, 1.0) if np.isclose(a.mean(), b.mean()) else (math.inf, 0.0)
    t, p = scipy_stats.ttest_ind(a, b, equal_var=False)
    return float(t), float(p)


@dataclass(frozen=True)
class MetricStat:
    mean: float
    se: float
    n: int


@dataclass
class EvalReport:
    """Per-model, per-class, per-horizon metric table plus pairwise tests."""

    horizons_s: List[float]
    tables: Dict[str, Dict[str, Dict[str, Dict[float, MetricStat]]]]
    comparisons: List[dict]
    samples: Dict[str, Dict[str, Dict[float, np.ndarray]]] = field(default_factory=dict, repr=False)

    def stat(self, model: str, metric: str, horizon_s: float, cls: str = ALL_CLASSES) -> MetricStat:
        return self.tables[model][cls][metric][horizon_s]

    def to_dict(self) -> dict:
        return {
            "horizons_s": self.horizons_s,
            "models": {
                m: {
                    cls: {
                        metric: {
                            str(h): {"mean": st.mean, "se": st.se, "n": st.n}
                            for h, st in by_h.items()
                        }
                        for metric, by_h in by_metric.items()
                    }
                    for cls, by_metric in by_class.items()
                }
                for m, by_class in self.tables.items()
            },
            "comparisons": self.comparisons,
        }


METRICS = ("ade", "fde", "anll", "fnll")


def evaluate(
    models: Union[TrajectoryForecaster, Dict[str, TrajectoryForecaster]],
    test_scenes: Sequence[Scene],
    horizons_s: Sequence[float] = (1.0, 2.0, 3.0),
    seed: int = 0,
) -> EvalReport:
    """Score one or more models on every (agent, timestep) with a full future.

    Emits mean, standard error (sample stdev / sqrt(n)) and count per metric,
    horizon, and agent class (class = the track's most often most-likely
    class), and two-tailed t-tests between each model pair on the pooled
    samples. Deterministic for a fixed seed.
    """
    if isinstance(models, TrajectoryForecaster):
        models = {"model": models}
    if not models:
        raise InvalidParameterError("no models to evaluate")
    if not test_scenes:
        raise InvalidParameterError("no test scenes")
    first = next(iter(models.values()))
    cfg = first.config
    dt = test_scenes[0].dt
    steps_by_h = {float(h): int(round(h / dt)) for h in horizons_s}
    max_steps = max(steps_by_h.values())

    instances = enumerate_instances(test_scenes, cfg, require_future=True, horizon=max_steps)
    if not instances:
        raise InvalidParameterError("no eligible evaluation instances (insufficient futures)")
    batch = build_batch(test_scenes, instances, cfg, horizon=max_steps)
    gt = batch.y  # (B, maxT, 2)

    by_scene = {s.scene_id: s for s in test_scenes}
    classes = np.array(
        [by_scene[i.scene_id].track(i.agent_id).modal_class() for i in instances], dtype=int
    )
    class_names = test_scenes[0].class_names

    samples: Dict[str, Dict[str, Dict[float, np.ndarray]]] = {}
    import torch

    from .model.network import bivariate_log_pdf

    for name, model in models.items():
        with torch.no_grad():
            dist = model.distribution_tensors(batch, horizon=max_steps)
            y_t = torch.as_tensor(gt, dtype=dist["means"].dtype)
            logp_t = bivariate_log_pdf(y_t[:, None, :, :], dist["means"], dist["covs"])
            log_w = torch.log(torch.clamp(dist["weights"], min=1e-30))
            mix = torch.logsumexp(logp_t + log_w[..., None], dim=1).cpu().numpy()  # (B,T)
            best = dist["weights"].argmax(dim=-1)
            idx = best.view(-1, 1, 1, 1).expand(-1, 1, max_steps, 2)
            ml = dist["means"].gather(1, idx).squeeze(1).cpu().numpy()
        disp = np.linalg.norm(ml - gt, axis=-1)  # (B,T)
        per_metric: Dict[str, Dict[float, np.ndarray]] = {m: {} for m in METRICS}
        for h, steps in steps_by_h.items():
            per_metric["ade"][h] = disp[:, :steps].mean(axis=1)
            per_metric["fde"][h] = disp[:, steps - 1]
            per_metric["anll"][h] = -mix[:, :steps].mean(axis=1)
            per_metric["fnll"][h] = -mix[:, steps - 1]
        samples[name] = per_metric

    tables: Dict[str, Dict[str, Dict[str, Dict[float, MetricStat]]]] = {}
    for name, per_metric in samples.items():
        by_class: Dict[str, Dict[str, Dict[float, MetricStat]]] = {}
        groups = {ALL_CLASSES: np.ones(len(instances), dtype=bool)}
        for ci, cname in enumerate(class_names):
            sel = classes == ci
            if sel.any():
                groups[cname] = sel
        for cls, sel in groups.items():
            by_class[cls] = {}
            for metric, by_h in per_metric.items():
                by_class[cls][metric] = {}
                for h, vals in by_h.items():
                    v = vals[sel]
                    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
                    by_class[cls][metric][h] = MetricStat(mean=float(v.mean()), se=se, n=int(v.size))
        tables[name] = by_class

    comparisons: List[dict] = []
    names = list(models.keys())
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            for metric in METRICS:
                for h in steps_by_h:
                    t, p = two_tailed_t_test(samples[names[i]][metric][h], samples[names[j]][metric][h])
                    comparisons.append(
                        {
                            "metric": metric,
                            "horizon_s": h,
                            "model_a": names[i],
                            "model_b": names[j],
                            "t": t,
                            "p": p,
                        }
                    )
    return EvalReport(
        horizons_s=[float(h) for h in horizons_s],
        tables=tables,
        comparisons=comparisons,
        samples=samples,
    )
