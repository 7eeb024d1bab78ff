"""Deterministic 70/15/15 train/val/test splitting by scene."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..errors import InvalidParameterError
from ..scene import Scene


@dataclass(frozen=True)
class DatasetSplit:
    train: List[str]
    val: List[str]
    test: List[str]
    seed: int

    def all_ids(self) -> List[str]:
        return list(self.train) + list(self.val) + list(self.test)


def split_scenes(scenes: Sequence[Scene], seed: int) -> DatasetSplit:
    """Shuffle scene ids by seed, then partition 70/15/15.

    Rounding rule: val and test each take floor(0.15 * n); train takes the
    remainder, so small datasets bias extra scenes into train.
    """
    ids = [s.scene_id for s in scenes]
    if len(ids) < 3:
        raise InvalidParameterError(f"need at least 3 scenes to split, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise InvalidParameterError("duplicate scene ids")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    n_val = int(np.floor(0.15 * n))
    n_test = int(np.floor(0.15 * n))
    n_train = n - n_val - n_test
    return DatasetSplit(
        train=shuffled[:n_train],
        val=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
        seed=int(seed),
    )


def select(scenes: Sequence[Scene], ids: Sequence[str]) -> List[Scene]:
    by_id = {s.scene_id: s for s in scenes}
    return [by_id[i] for i in ids]
