"""The four prediction streams and their fusion into a final classification.

Streams:
  iip+  softmax over -epsilon * d(h_test, positive prototype_k)
  iip-  softmax over +epsilon * d(h_test, negative prototype_k)
  itp+  softmax over  cos(v, text_positive_k) / tau
  itp-  softmax over -cos(v, text_negative_k) / tau

Image-image and image-text pairs are fused by plain element-wise addition
(no renormalization), and the final score is alpha * P_II + P_IT. A fusion
with a single enabled operand passes it through unchanged.

All reductions run row-wise over the feature axis, so batched evaluation is
bit-identical to per-item evaluation and safe to chunk or parallelize.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import poincare
from .errors import DegenerateInputError, InvalidInputError, ShapeError
from .prototype import DEFAULT_SCALE, PrototypeSet, preprocess_feature
from .textbank import TextBank

COMPONENTS = ("iip+", "iip-", "itp+", "itp-")

METRICS = ("hd", "ecs")

DEFAULT_ALPHA = 1.2
DEFAULT_EPSILON = 5.0
DEFAULT_TAU = 0.01

# Row-wise reductions materialize (rows, classes, dim) intermediates; cap
# chunks so that stays within ~256 MB of float64 regardless of problem size.
_CHUNK_BUDGET_ELEMENTS = 32_000_000
_CHUNK_ROWS_MAX = 4096


def _chunk_rows(class_count: int, dim: int) -> int:
    return max(1, min(_CHUNK_ROWS_MAX, _CHUNK_BUDGET_ELEMENTS // max(class_count * dim, 1)))


@dataclass(frozen=True)
class FusionConfig:
    """Fusion weights, temperatures, and the set of enabled streams."""

    alpha: float = DEFAULT_ALPHA
    epsilon: float = DEFAULT_EPSILON
    tau: float = DEFAULT_TAU
    components: frozenset[str] = field(default_factory=lambda: frozenset(COMPONENTS))

    def __post_init__(self):
        comps = frozenset(self.components)
        unknown = comps - set(COMPONENTS)
        if unknown:
            raise InvalidInputError(f"unknown components {sorted(unknown)}; valid: {COMPONENTS}")
        if not comps:
            raise InvalidInputError("at least one component must be enabled")
        if self.alpha < 0:
            raise InvalidInputError("alpha must be non-negative")
        if self.epsilon <= 0 or self.tau <= 0:
            raise InvalidInputError("epsilon and tau must be positive")
        object.__setattr__(self, "components", comps)


def parse_components(text: str) -> frozenset[str]:
    """Parse the CLI form ``iip+,iip-,itp+,itp-`` (case-insensitive)."""
    names = [t.strip().lower() for t in text.split(",") if t.strip()]
    return FusionConfig(components=frozenset(names)).components


@dataclass(frozen=True)
class PredictionVector:
    """Per-class scores; ``normalized`` marks a single softmax stream."""

    scores: np.ndarray
    normalized: bool

    def __post_init__(self):
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=np.float64))

    @property
    def class_count(self) -> int:
        return self.scores.shape[-1]

    def argmax(self) -> int:
        """Predicted class; ties break to the lowest index."""
        return int(np.argmax(self.scores, axis=-1))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def _rowwise_dot(v: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # (..., d) x (K, d) -> (..., K) without BLAS so per-row results do not
    # depend on batch shape.
    return np.sum(v[..., None, :] * rows, axis=-1)


def _unit_rows(v: np.ndarray, name: str) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DegenerateInputError(f"{name} contains a zero vector")
    return v / norm


def _check_bank(bank: np.ndarray) -> np.ndarray:
    bank = np.asarray(bank, dtype=np.float64)
    if bank.ndim != 2:
        raise InvalidInputError("text bank must be a (class_count, dim) array")
    if np.any(np.abs(np.linalg.norm(bank, axis=-1) - 1.0) > 1e-6):
        raise InvalidInputError("text bank vectors must be unit norm")
    return bank


def predict_hyperbolic_positive(h_test, prototypes, epsilon: float = DEFAULT_EPSILON) -> PredictionVector:
    """Positive image-image stream: softmax(-epsilon * d(h, prototype_k))."""
    d = poincare.distance(np.asarray(h_test, dtype=np.float64)[..., None, :], prototypes)
    return PredictionVector(scores=_softmax(-epsilon * d), normalized=True)


def predict_hyperbolic_negative(h_test, negatives, epsilon: float = DEFAULT_EPSILON) -> PredictionVector:
    """Negative image-image stream: softmax(+epsilon * d(h, negative_k)).

    Distance to a class's negative prototype is evidence *for* the class,
    hence the flipped sign.
    """
    d = poincare.distance(np.asarray(h_test, dtype=np.float64)[..., None, :], negatives)
    return PredictionVector(scores=_softmax(epsilon * d), normalized=True)


def predict_text(v, bank, tau: float = DEFAULT_TAU, polarity: str = "positive") -> PredictionVector:
    """Image-text stream: softmax(cos(v, f_k)/tau), sign-flipped for negative prompts."""
    if polarity not in ("positive", "negative"):
        raise InvalidInputError("polarity must be 'positive' or 'negative'")
    bank = _check_bank(bank)
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("test feature contains non-finite entries")
    sims = _rowwise_dot(_unit_rows(v, "test feature"), bank)
    sign = 1.0 if polarity == "positive" else -1.0
    return PredictionVector(scores=_softmax(sign * sims / tau), normalized=True)


def _fuse_pair(p_pos: PredictionVector, p_neg: PredictionVector) -> PredictionVector:
    a, b = p_pos.scores, p_neg.scores
    if a.shape != b.shape:
        raise ShapeError(f"cannot fuse score shapes {a.shape} and {b.shape}")
    return PredictionVector(scores=a + b, normalized=False)


def fuse_image_image(p_pos: PredictionVector, p_neg: PredictionVector) -> PredictionVector:
    """Element-wise sum of the two image-image streams (left unnormalized)."""
    return _fuse_pair(p_pos, p_neg)


def fuse_image_text(p_pos: PredictionVector, p_neg: PredictionVector) -> PredictionVector:
    """Element-wise sum of the two image-text streams (left unnormalized)."""
    return _fuse_pair(p_pos, p_neg)


def fuse_final(p_ii: PredictionVector, p_it: PredictionVector, alpha: float = DEFAULT_ALPHA) -> PredictionVector:
    """Final scores alpha * P_II + P_IT."""
    a, b = p_ii.scores, p_it.scores
    if a.shape != b.shape:
        raise ShapeError(f"cannot fuse score shapes {a.shape} and {b.shape}")
    return PredictionVector(scores=alpha * a + b, normalized=False)


def renormalized(p: PredictionVector) -> PredictionVector:
    """Scores rescaled to sum to one, for reporting; cannot change the argmax."""
    total = np.sum(p.scores, axis=-1, keepdims=True)
    return PredictionVector(scores=p.scores / total, normalized=True)


def _branch(streams: list[PredictionVector]) -> PredictionVector | None:
    if not streams:
        return None
    if len(streams) == 1:
        return streams[0]
    return _fuse_pair(streams[0], streams[1])


def _combine(p_ii: PredictionVector | None, p_it: PredictionVector | None, alpha: float) -> PredictionVector:
    if p_ii is not None and p_it is not None:
        return fuse_final(p_ii, p_it, alpha)
    only = p_ii if p_ii is not None else p_it
    assert only is not None  # FusionConfig guarantees a nonempty component set
    return only


def classify_batch(
    test_features,
    prototypes: PrototypeSet,
    bank: TextBank,
    config: FusionConfig | None = None,
    scale: float = DEFAULT_SCALE,
    metric: str = "hd",
) -> list[tuple[int, PredictionVector]]:
    """Run the enabled streams over a batch of test features.

    Each feature is normalized to ``scale`` and exp-mapped into the ball for
    the image-image streams (metric ``hd``); with metric ``ecs`` the
    image-image streams use negative cosine similarity against un-mapped
    prototypes instead. Items are independent; output order matches input.
    """
    config = config or FusionConfig()
    if metric not in METRICS:
        raise InvalidInputError(f"metric must be one of {METRICS}")
    expected_geometry = "hyperbolic" if metric == "hd" else "euclidean"
    needs_image = bool(config.components & {"iip+", "iip-"})
    if needs_image and prototypes.geometry != expected_geometry:
        raise InvalidInputError(
            f"metric {metric!r} needs {expected_geometry} prototypes, got {prototypes.geometry!r}"
        )

    feats = np.asarray(test_features, dtype=np.float64)
    if feats.size == 0:
        return []
    feats = np.atleast_2d(feats)
    if feats.ndim != 2:
        raise InvalidInputError("test features must be a (items, dim) array")
    if feats.shape[1] != prototypes.positive.shape[1]:
        raise ShapeError(
            f"test feature dim {feats.shape[1]} != prototype dim {prototypes.positive.shape[1]}"
        )
    if bank.positive.shape[1] != feats.shape[1]:
        raise ShapeError(
            f"test feature dim {feats.shape[1]} != text bank dim {bank.positive.shape[1]}"
        )
    if bank.class_count != prototypes.class_count:
        raise ShapeError("text bank and prototypes disagree on class count")
    if not np.all(np.isfinite(feats)):
        raise InvalidInputError("test features contain non-finite entries")

    results: list[tuple[int, PredictionVector]] = []
    rows_per_chunk = _chunk_rows(prototypes.class_count, feats.shape[1])
    for start in range(0, feats.shape[0], rows_per_chunk):
        chunk = feats[start : start + rows_per_chunk]
        finals = _classify_chunk(chunk, prototypes, bank, config, scale, metric)
        for row in finals.scores:
            pv = PredictionVector(scores=row, normalized=finals.normalized)
            results.append((pv.argmax(), pv))
    return results


def _classify_chunk(
    chunk: np.ndarray,
    prototypes: PrototypeSet,
    bank: TextBank,
    config: FusionConfig,
    scale: float,
    metric: str,
) -> PredictionVector:
    comps = config.components
    image_streams: list[PredictionVector] = []
    text_streams: list[PredictionVector] = []

    if comps & {"iip+", "iip-"}:
        prepped = preprocess_feature(chunk, scale)
        if metric == "hd":
            h = poincare.exp_map_origin(prepped)
            if "iip+" in comps:
                image_streams.append(predict_hyperbolic_positive(h, prototypes.positive, config.epsilon))
            if "iip-" in comps:
                image_streams.append(predict_hyperbolic_negative(h, prototypes.negative, config.epsilon))
        else:
            unit = _unit_rows(prepped, "test features")
            if "iip+" in comps:
                d = -_cosine_to_rows(unit, prototypes.positive)
                image_streams.append(PredictionVector(scores=_softmax(-config.epsilon * d), normalized=True))
            if "iip-" in comps:
                d = -_cosine_to_rows(unit, prototypes.negative)
                image_streams.append(PredictionVector(scores=_softmax(config.epsilon * d), normalized=True))

    if "itp+" in comps:
        text_streams.append(predict_text(chunk, bank.positive, config.tau, "positive"))
    if "itp-" in comps:
        text_streams.append(predict_text(chunk, bank.negative, config.tau, "negative"))

    return _combine(_branch(image_streams), _branch(text_streams), config.alpha)


def _cosine_to_rows(unit_v: np.ndarray, rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=-1)
    safe = np.where(norms > 0.0, norms, 1.0)
    # A zero prototype has no direction; its cosine is defined as 0.
    return _rowwise_dot(unit_v, rows / safe[:, None])
