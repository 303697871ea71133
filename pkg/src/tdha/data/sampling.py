"""Deterministic few-shot episode sampling from an embedding bundle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientSamplesError, InvalidInputError
from ..prototype import SupportSet
from ..seeding import derive_rng
from .io import EmbeddingBundle

PROTOCOL_SHOTS = (1, 2, 4, 8, 16)


@dataclass(frozen=True)
class EpisodeSpec:
    """One seeded support-set draw: shot count, base seed, episode number."""

    shots: int
    seed: int
    episode_index: int = 0

    def __post_init__(self):
        if self.shots < 1:
            raise InvalidInputError("shots must be >= 1")
        if self.episode_index < 0:
            raise InvalidInputError("episode_index must be >= 0")


def sample_episode(bundle: EmbeddingBundle, spec: EpisodeSpec) -> SupportSet:
    """Draw ``spec.shots`` distinct train samples per class.

    The draw for each class is keyed by (seed, episode_index, class name),
    so episodes are independent, repeatable, and stable under class
    reordering. Selected indices are sorted, making an exhaustive draw
    return the class's train split verbatim.
    """
    n = spec.shots
    feature_blocks = []
    label_blocks = []
    for k, name in enumerate(bundle.class_names):
        rows = np.flatnonzero(bundle.train_labels == k)
        if rows.size < n:
            raise InsufficientSamplesError(
                f"class {name!r} has {rows.size} train samples; {n} shots requested"
            )
        rng = derive_rng(spec.seed, "episode", spec.episode_index, name)
        picked = np.sort(rows[rng.choice(rows.size, size=n, replace=False)])
        feature_blocks.append(bundle.train_features[picked])
        label_blocks.append(np.full(n, k, dtype=np.int64))
    return SupportSet(
        features=np.concatenate(feature_blocks).astype(np.float64),
        labels=np.concatenate(label_blocks),
        class_count=bundle.class_count,
        shots_per_class=n,
        class_names=bundle.class_names,
    )
