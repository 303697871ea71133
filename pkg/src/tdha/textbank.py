"""Aggregation of per-class prompt features into positive/negative text banks.

Prompt features come from an embedding bundle; this module never calls a
text encoder. Aggregation follows the standard prompt-ensembling
convention: normalize every prompt feature, average, renormalize. The
literal raw-feature mean is available behind a flag for fidelity checks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDataWarning,
    DegenerateInputError,
    InvalidInputError,
    PromptFormatError,
)

CLASS_PLACEHOLDER = "{class}"

# Word inserted before the class token to build a negated prompt.
NEGATION_WORD = "no"

_UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class TextBank:
    """Per-class aggregated prompt features, unit norm, one row per class."""

    positive: np.ndarray
    negative: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        pos = np.asarray(self.positive, dtype=np.float64)
        neg = np.asarray(self.negative, dtype=np.float64)
        k = len(self.class_names)
        if pos.ndim != 2 or pos.shape[0] != k or neg.shape != pos.shape:
            raise InvalidInputError("text banks must both be (class_count, dim)")
        for name, arr in (("positive", pos), ("negative", neg)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} text bank contains non-finite entries")
            norms = np.linalg.norm(arr, axis=-1)
            if np.any(np.abs(norms - 1.0) > _UNIT_NORM_TOL):
                raise InvalidInputError(f"{name} text bank vectors must be unit norm")
        coincident = np.flatnonzero(np.all(pos == neg, axis=-1))
        if coincident.size:
            warnings.warn(
                f"positive and negative text features coincide for classes {coincident.tolist()}",
                DegenerateDataWarning,
                stacklevel=2,
            )
        object.__setattr__(self, "positive", pos)
        object.__setattr__(self, "negative", neg)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def class_count(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True)
class PromptBank:
    """Raw (pre-aggregation) prompt features: per class, (L_k, dim) arrays."""

    positive: tuple[np.ndarray, ...]
    negative: tuple[np.ndarray, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        k = len(self.class_names)
        if len(self.positive) != k or len(self.negative) != k:
            raise InvalidInputError("prompt banks must have one entry per class")
        for polarity, groups in (("positive", self.positive), ("negative", self.negative)):
            for idx, group in enumerate(groups):
                arr = np.asarray(group, dtype=np.float64)
                if arr.ndim != 2 or arr.shape[0] < 1:
                    raise InvalidInputError(
                        f"{polarity} prompts for class {self.class_names[idx]!r} "
                        "must be a nonempty (prompts, dim) array"
                    )
        object.__setattr__(
            self, "positive", tuple(np.asarray(g, dtype=np.float64) for g in self.positive)
        )
        object.__setattr__(
            self, "negative", tuple(np.asarray(g, dtype=np.float64) for g in self.negative)
        )
        object.__setattr__(self, "class_names", tuple(self.class_names))


def _aggregate_group(group: np.ndarray, class_name: str, polarity: str, normalize_prompts: bool) -> np.ndarray:
    if not np.all(np.isfinite(group)):
        raise InvalidInputError(f"{polarity} prompt features for {class_name!r} contain non-finite entries")
    if normalize_prompts:
        norms = np.linalg.norm(group, axis=-1, keepdims=True)
        zero = np.flatnonzero(norms.ravel() == 0.0)
        if zero.size:
            raise DegenerateInputError(
                f"zero {polarity} prompt feature for class {class_name!r} at index {int(zero[0])}"
            )
        group = group / norms
    mean = group.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise DegenerateInputError(
            f"aggregated {polarity} prompt feature for class {class_name!r} is the zero vector"
        )
    return mean / norm


def aggregate(bank: PromptBank, normalize_prompts: bool = True) -> TextBank:
    """Collapse a prompt bank into one unit vector per class and polarity.

    With ``normalize_prompts`` (default) each prompt feature is normalized
    before averaging, so a prompt's raw magnitude carries no weight; set it
    False to average raw features first (the output is renormalized either way).
    """
    positive = np.stack(
        [
            _aggregate_group(g, name, "positive", normalize_prompts)
            for g, name in zip(bank.positive, bank.class_names)
        ]
    )
    negative = np.stack(
        [
            _aggregate_group(g, name, "negative", normalize_prompts)
            for g, name in zip(bank.negative, bank.class_names)
        ]
    )
    return TextBank(positive=positive, negative=negative, class_names=bank.class_names)


def render_prompt(template: str, class_name: str) -> str:
    """Substitute the class token into a prompt template."""
    if CLASS_PLACEHOLDER not in template:
        raise PromptFormatError(f"template {template!r} has no {CLASS_PLACEHOLDER} placeholder")
    return template.replace(CLASS_PLACEHOLDER, class_name)


def negate_prompt_text(template: str, class_name: str) -> str:
    """Build the negated prompt: ``a photo of {class}`` -> ``a photo of no cat``."""
    return render_prompt(template, f"{NEGATION_WORD} {class_name}")
