"""Positive and negative class prototypes from a few-shot support set.

A positive prototype is the exp-mapped mean of a class's support features.
A negative prototype represents what a class is *not*: one feature drawn at
random from each of the other K-1 classes, mapped into the ball, then
averaged (coordinate-wise by default, or through the tangent space).

All builders assume support features were already conditioned with
``preprocess_feature`` (unit-normalized then scaled); raw encoder features
would saturate tanh onto the ball boundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import poincare
from .errors import DegenerateDataWarning, DegenerateInputError, InvalidInputError
from .seeding import derive_rng

DEFAULT_SCALE = 0.5

MEAN_MODES = ("ambient", "tangent")


@dataclass(frozen=True)
class SupportSet:
    """N-shot, K-class support features with integer labels in [0, K)."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    shots_per_class: int
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[-1] < 1:
            raise InvalidInputError("support features must be a (samples, dim) array")
        if not np.all(np.isfinite(feats)):
            raise InvalidInputError("support features contain non-finite entries")
        if labels.shape != (feats.shape[0],):
            raise InvalidInputError("labels must align one-to-one with features")
        if self.class_count < 1 or self.shots_per_class < 1:
            raise InvalidInputError("class_count and shots_per_class must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise InvalidInputError("labels must lie in [0, class_count)")
        counts = np.bincount(labels, minlength=self.class_count)
        if not np.all(counts == self.shots_per_class):
            raise InvalidInputError(
                f"every class needs exactly {self.shots_per_class} support samples; got {counts.tolist()}"
            )
        if self.class_names is not None and len(self.class_names) != self.class_count:
            raise InvalidInputError("class_names length must equal class_count")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_key(self, k: int) -> str:
        """Stable identity of class k for seeding; survives class reordering."""
        return self.class_names[k] if self.class_names is not None else str(k)

    def class_rows(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)


@dataclass(frozen=True)
class PrototypeSet:
    """Per-class positive and negative prototypes, one point each."""

    positive: np.ndarray
    negative: np.ndarray
    class_count: int
    geometry: str = "hyperbolic"

    def __post_init__(self):
        pos = np.asarray(self.positive, dtype=np.float64)
        neg = np.asarray(self.negative, dtype=np.float64)
        expected = (self.class_count, pos.shape[-1])
        if pos.shape != expected or neg.shape != expected:
            raise InvalidInputError("prototype arrays must both be (class_count, dim)")
        if self.geometry not in ("hyperbolic", "euclidean"):
            raise InvalidInputError("geometry must be 'hyperbolic' or 'euclidean'")
        for name, arr in (("positive", pos), ("negative", neg)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} prototypes contain non-finite entries")
            # Euclidean prototype sets (cosine-similarity ablation) are not ball points.
            if self.geometry == "hyperbolic" and np.any(np.sum(arr * arr, axis=-1) >= 1.0):
                raise InvalidInputError(f"{name} prototypes must lie strictly inside the unit ball")
        coincident = np.flatnonzero(np.all(pos == neg, axis=-1))
        if coincident.size:
            warnings.warn(
                f"positive and negative prototypes coincide for classes {coincident.tolist()}",
                DegenerateDataWarning,
                stacklevel=2,
            )
        object.__setattr__(self, "positive", pos)
        object.__setattr__(self, "negative", neg)


def preprocess_feature(v, scale: float = DEFAULT_SCALE) -> np.ndarray:
    """L2-normalize a feature (or batch) and rescale to norm == scale."""
    if scale <= 0:
        raise InvalidInputError("scale must be positive")
    arr = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("feature contains non-finite entries")
    norm = np.linalg.norm(arr, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DegenerateInputError("cannot preprocess a zero feature vector")
    return arr / norm * scale


def preprocess_support(support: SupportSet, scale: float = DEFAULT_SCALE) -> SupportSet:
    """Support set with every feature normalized to norm == scale."""
    return SupportSet(
        features=preprocess_feature(support.features, scale),
        labels=support.labels,
        class_count=support.class_count,
        shots_per_class=support.shots_per_class,
        class_names=support.class_names,
    )


def class_means(support: SupportSet) -> np.ndarray:
    """Per-class arithmetic mean of support features (Euclidean prototypes)."""
    return np.stack(
        [support.features[support.class_rows(k)].mean(axis=0) for k in range(support.class_count)]
    )


def build_positive(support: SupportSet) -> np.ndarray:
    """Positive prototypes: exp-mapped per-class feature means, shape (K, dim)."""
    return poincare.exp_map_origin(class_means(support))


def draw_negative_indices(support: SupportSet, seed: int) -> np.ndarray:
    """Row indices of the one-per-other-class negative draw, shape (K, K-1).

    The draw for (target class, donor class) is keyed by the two class
    identities, not their positions, so relabeling class order permutes but
    never changes the selected samples.
    """
    k_count = support.class_count
    if k_count < 2:
        raise InvalidInputError("negative prototypes need at least two classes")
    picks = np.empty((k_count, k_count - 1), dtype=np.int64)
    for k in range(k_count):
        donors = [j for j in range(k_count) if j != k]
        for col, j in enumerate(donors):
            rows = support.class_rows(j)
            rng = derive_rng(seed, "negative-draw", support.class_key(k), support.class_key(j))
            picks[k, col] = rows[int(rng.integers(rows.size))]
    return picks


def _negatives_from_picks(
    support: SupportSet,
    picks: np.ndarray,
    mean_mode: str,
    positive: np.ndarray | None = None,
) -> np.ndarray:
    if mean_mode not in MEAN_MODES:
        raise InvalidInputError(f"mean_mode must be one of {MEAN_MODES}")
    mean = poincare.ambient_mean if mean_mode == "ambient" else poincare.tangent_mean
    out = np.empty((support.class_count, support.dim))
    for k in range(support.class_count):
        mapped = poincare.exp_map_origin(support.features[picks[k]])
        out[k] = mean(mapped)
        if positive is not None and np.any(np.all(mapped == positive[k], axis=-1)):
            warnings.warn(
                f"a drawn negative sample coincides with the positive prototype of class {k}",
                DegenerateDataWarning,
                stacklevel=3,
            )
    return out


def build_negative(
    support: SupportSet,
    seed: int,
    mean_mode: str = "ambient",
) -> np.ndarray:
    """Negative prototypes: averaged ball images of one sample per other class.

    ``mean_mode='ambient'`` averages the mapped points coordinate-wise
    (matches the two-class worked construction); ``'tangent'`` averages in
    the tangent space at the origin instead.
    """
    picks = draw_negative_indices(support, seed)
    return _negatives_from_picks(support, picks, mean_mode)


def build_negative_euclidean(support: SupportSet, seed: int) -> np.ndarray:
    """Un-mapped negative prototypes (plain mean of the same drawn samples).

    Shares ``draw_negative_indices`` with ``build_negative`` so the
    cosine-similarity ablation is paired draw-for-draw with the hyperbolic run.
    """
    picks = draw_negative_indices(support, seed)
    return np.stack([support.features[picks[k]].mean(axis=0) for k in range(support.class_count)])


def build_prototype_set(
    support: SupportSet,
    scale: float = DEFAULT_SCALE,
    seed: int = 0,
    mean_mode: str = "ambient",
    geometry: str = "hyperbolic",
) -> PrototypeSet:
    """Preprocess a raw support set and build its prototypes in one step."""
    if geometry not in ("hyperbolic", "euclidean"):
        raise InvalidInputError("geometry must be 'hyperbolic' or 'euclidean'")
    prepped = preprocess_support(support, scale)
    if geometry == "hyperbolic":
        positive = build_positive(prepped)
        picks = draw_negative_indices(prepped, seed)
        negative = _negatives_from_picks(prepped, picks, mean_mode, positive=positive)
    else:
        positive = class_means(prepped)
        negative = build_negative_euclidean(prepped, seed)
    return PrototypeSet(
        positive=positive,
        negative=negative,
        class_count=support.class_count,
        geometry=geometry,
    )
