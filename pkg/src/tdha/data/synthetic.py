"""Synthetic hierarchical embedding bundles for desk-scale validation.

Classes are organized two levels deep: ``super_count`` superclass
directions drawn uniformly on the unit sphere, each carrying
``classes_per_super`` subclasses whose mean directions are small
perturbations of the superclass direction. Image features are noisy copies
of their subclass mean; text features sit a controllable modality gap away
from the same mean. The negative text feature of a class mirrors the
negative-prototype construction: the (renormalized) mean of every other
class's positive text feature.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from ..seeding import derive_rng
from .io import EmbeddingBundle

# Magnitude of the subclass perturbation; well under the typical
# inter-superclass separation (~sqrt(2)) so branches stay distinct, and
# small enough that same-branch classes remain genuinely confusable.
DEFAULT_SUBCLASS_SPREAD = 0.35


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _hierarchy_means(
    super_count: int, classes_per_super: int, dim: int, seed: int, subclass_spread: float
) -> tuple[np.ndarray, np.ndarray]:
    """Superclass directions and subclass means, all on the unit sphere."""
    super_dirs = _unit(derive_rng(seed, "super-directions").normal(size=(super_count, dim)))
    sub_means = np.empty((super_count * classes_per_super, dim))
    for s in range(super_count):
        for c in range(classes_per_super):
            offset = _unit(derive_rng(seed, "subclass", s, c).normal(size=dim))
            sub_means[s * classes_per_super + c] = _unit(super_dirs[s] + subclass_spread * offset)
    return super_dirs, sub_means


def generate_synthetic(
    classes_per_super: int,
    super_count: int,
    dim: int,
    noise_sigma: float,
    modality_gap: float,
    train_per_class: int,
    test_per_class: int,
    seed: int,
    subclass_spread: float = DEFAULT_SUBCLASS_SPREAD,
) -> EmbeddingBundle:
    """Build a deterministic hierarchical bundle; same seed, same bytes."""
    if dim < 2:
        raise InvalidInputError("synthetic bundles need dim >= 2")
    if classes_per_super < 1 or super_count < 1:
        raise InvalidInputError("class and superclass counts must be >= 1")
    if classes_per_super * super_count < 2:
        raise InvalidInputError("need at least two classes to form negative text features")
    if train_per_class < 1 or test_per_class < 1:
        raise InvalidInputError("per-class sample counts must be >= 1")
    if noise_sigma < 0 or modality_gap < 0:
        raise InvalidInputError("noise_sigma and modality_gap must be >= 0")

    _, sub_means = _hierarchy_means(super_count, classes_per_super, dim, seed, subclass_spread)
    k_count = super_count * classes_per_super
    class_names = tuple(f"s{s}_c{c}" for s in range(super_count) for c in range(classes_per_super))

    def sample_split(role: str, per_class: int) -> tuple[np.ndarray, np.ndarray]:
        feats = np.empty((k_count * per_class, dim))
        labels = np.empty(k_count * per_class, dtype=np.int64)
        for k in range(k_count):
            noise = derive_rng(seed, role, k).normal(size=(per_class, dim))
            feats[k * per_class : (k + 1) * per_class] = _unit(sub_means[k] + noise_sigma * noise)
            labels[k * per_class : (k + 1) * per_class] = k
        return feats, labels

    train_features, train_labels = sample_split("train", train_per_class)
    test_features, test_labels = sample_split("test", test_per_class)

    text_positive = np.empty((k_count, dim))
    for k in range(k_count):
        gap = derive_rng(seed, "text", k).normal(size=dim)
        text_positive[k] = _unit(sub_means[k] + modality_gap * gap)
    text_negative = np.empty((k_count, dim))
    for k in range(k_count):
        others = np.delete(text_positive, k, axis=0)
        text_negative[k] = _unit(others.mean(axis=0))

    metadata = {
        "source": "synthetic-hierarchy",
        "super_count": str(super_count),
        "classes_per_super": str(classes_per_super),
        "dim": str(dim),
        "noise_sigma": repr(float(noise_sigma)),
        "modality_gap": repr(float(modality_gap)),
        "subclass_spread": repr(float(subclass_spread)),
        "train_per_class": str(train_per_class),
        "test_per_class": str(test_per_class),
        "seed": str(seed),
    }
    return EmbeddingBundle(
        dim=dim,
        class_names=class_names,
        train_features=train_features.astype(np.float32),
        train_labels=train_labels,
        test_features=test_features.astype(np.float32),
        test_labels=test_labels,
        text_positive=text_positive.astype(np.float32),
        text_negative=text_negative.astype(np.float32),
        metadata=metadata,
    )
