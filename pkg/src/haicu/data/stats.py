"""Uncertainty statistics over class-probability tracks.

Covers most-likely-class switching, majority-vote smoothing, per-class entropy
summaries, and classifier quality (confusion matrix, top-k accuracy) when
ground-truth classes are available. Argmax ties always resolve to the lowest
class index.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import InvalidParameterError
from ..scene import AgentTrack, Scene, class_entropy


@dataclass(frozen=True)
class SwitchReport:
    """Most-likely-class changes within one track."""

    count: int
    switches: Tuple[Tuple[int, int, int], ...]  # (timestep, from_class, to_class)
    distinct_classes: int


def detect_class_switches(track: AgentTrack) -> SwitchReport:
    """Record a switch at t whenever argmax(probs_t) != argmax(probs_{t-1}).

    Comparisons only happen between consecutive timesteps inside the same
    observation segment; a track with fewer than 2 observations yields an
    empty report.
    """
    if len(track) < 2:
        return SwitchReport(count=0, switches=(), distinct_classes=min(len(track), 1))
    argmax = track.argmax_classes()
    switches: List[Tuple[int, int, int]] = []
    for seg in track.segments():
        seg_t = track.timesteps[seg]
        seg_a = argmax[seg]
        for i in range(1, len(seg_a)):
            if seg_a[i] != seg_a[i - 1]:
                switches.append((int(seg_t[i]), int(seg_a[i - 1]), int(seg_a[i])))
    return SwitchReport(
        count=len(switches),
        switches=tuple(switches),
        distinct_classes=int(np.unique(argmax).size),
    )


def majority_vote_smooth(track: AgentTrack, window: int = 5) -> AgentTrack:
    """Replace each timestep's class by the majority argmax over a centered window.

    Windows truncate at segment boundaries. The winner's one-hot vector
    replaces the probability vector. A tie for the majority resolves to the
    center timestep's own argmax. window must be odd.
    """
    if window < 1 or window % 2 == 0:
        raise InvalidParameterError(f"window must be odd and >= 1, got {window}")
    half = window // 2
    argmax = track.argmax_classes()
    k = track.num_classes
    new_probs = np.zeros_like(track.class_probs)
    for seg in track.segments():
        seg_a = argmax[seg]
        n = len(seg_a)
        for i in range(n):
            lo = max(0, i - half)
            hi = min(n, i + half + 1)
            counts = np.bincount(seg_a[lo:hi], minlength=k)
            top = counts.max()
            winners = np.flatnonzero(counts == top)
            winner = int(winners[0]) if winners.size == 1 else int(seg_a[i])
            new_probs[seg.start + i, winner] = 1.0
    return AgentTrack(
        agent_id=track.agent_id,
        timesteps=track.timesteps,
        states=track.states,
        class_probs=new_probs,
        true_class=track.true_class,
    )


@dataclass
class DatasetStatistics:
    """Aggregate uncertainty statistics for a scene collection."""

    class_names: List[str]
    class_counts: Dict[str, int]
    class_percentages: Dict[str, float]
    mean_entropy_per_class: Dict[str, float]
    switch_fraction: float
    switch_histogram: Dict[str, int]  # "from->to" -> count
    mean_top_prob_by_age: List[float]
    n_agents: int

    def to_dict(self) -> dict:
        return {
            "class_names": self.class_names,
            "n_agents": self.n_agents,
            "per_class": {
                name: {
                    "count": self.class_counts[name],
                    "percentage": self.class_percentages[name],
                    "mean_entropy": self.mean_entropy_per_class[name],
                }
                for name in self.class_names
            },
            "switch_fraction": self.switch_fraction,
            "switch_histogram": self.switch_histogram,
            "mean_top_prob_by_age": self.mean_top_prob_by_age,
        }


def dataset_statistics(scenes: Sequence[Scene]) -> DatasetStatistics:
    """Compute per-class counts/entropies, switch statistics, and confidence-vs-age.

    Agents are assigned to their most often most-likely class. Entropy means
    are over all (agent, timestep) samples of agents in the class. Track age
    is the index since the agent's first observation.
    """
    if not scenes:
        raise InvalidParameterError("dataset_statistics requires at least one scene")
    class_names = scenes[0].class_names
    k = len(class_names)
    counts = np.zeros(k, dtype=int)
    entropy_sums = np.zeros(k)
    entropy_n = np.zeros(k, dtype=int)
    n_agents = 0
    n_switched = 0
    hist: Counter = Counter()
    age_sum: List[float] = []
    age_n: List[int] = []
    for scene in scenes:
        if scene.class_names != class_names:
            raise InvalidParameterError("all scenes must share class_names")
        for track in scene.tracks:
            n_agents += 1
            cls = track.modal_class()
            counts[cls] += 1
            ent = np.array([class_entropy(row) for row in track.class_probs])
            entropy_sums[cls] += ent.sum()
            entropy_n[cls] += ent.size
            report = detect_class_switches(track)
            if report.count > 0:
                n_switched += 1
                for _, frm, to in report.switches:
                    hist[f"{class_names[frm]}->{class_names[to]}"] += 1
            top = track.class_probs.max(axis=1)
            for age, p in enumerate(top):
                if age >= len(age_sum):
                    age_sum.append(0.0)
                    age_n.append(0)
                age_sum[age] += float(p)
                age_n[age] += 1
    with np.errstate(invalid="ignore"):
        mean_entropy = np.where(entropy_n > 0, entropy_sums / np.maximum(entropy_n, 1), 0.0)
    return DatasetStatistics(
        class_names=list(class_names),
        class_counts={name: int(counts[i]) for i, name in enumerate(class_names)},
        class_percentages={
            name: 100.0 * counts[i] / n_agents for i, name in enumerate(class_names)
        },
        mean_entropy_per_class={name: float(mean_entropy[i]) for i, name in enumerate(class_names)},
        switch_fraction=n_switched / n_agents,
        switch_histogram=dict(sorted(hist.items())),
        mean_top_prob_by_age=[s / n for s, n in zip(age_sum, age_n)],
        n_agents=n_agents,
    )


def confusion_and_topk(tracks: Sequence[AgentTrack], max_k: int = 5):
    """Classifier quality against ground-truth classes.

    Classification of a track is its most often most-likely class. Returns a
    row-normalized (true x predicted) confusion matrix and top-k accuracies
    for k = 1..max_k, where a top-k hit means the true class is among the k
    largest time-averaged probabilities.
    """
    if not tracks:
        raise InvalidParameterError("confusion_and_topk requires at least one track")
    k_classes = tracks[0].num_classes
    confusion = np.zeros((k_classes, k_classes))
    max_k = min(max_k, k_classes)
    hits = np.zeros(max_k)
    for track in tracks:
        if track.true_class is None:
            raise InvalidParameterError(f"track {track.agent_id} is missing true_class")
        confusion[track.true_class, track.modal_class()] += 1
        mean_probs = track.class_probs.mean(axis=0)
        # Stable ranking: descending probability, ascending index on ties.
        order = np.lexsort((np.arange(k_classes), -mean_probs))
        rank = int(np.flatnonzero(order == track.true_class)[0])
        for kk in range(max_k):
            if rank <= kk:
                hits[kk] += 1
    row_sums = confusion.sum(axis=1, keepdims=True)
    normalized = np.divide(confusion, row_sums, out=np.zeros_like(confusion), where=row_sums > 0)
    topk = {kk + 1: float(hits[kk] / len(tracks)) for kk in range(max_k)}
    return normalized, topk
