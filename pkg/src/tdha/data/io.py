"""Embedding-bundle I/O: the EMB1 array format and the bundle manifest.

An on-disk bundle is a directory holding ``manifest.json`` plus one EMB1
array file per tensor. EMB1 is deliberately minimal and language-neutral:

    bytes 0..3   magic "EMB1"
    bytes 4..7   format version, uint32 little-endian (currently 1)
    bytes 8..11  row count, uint32 little-endian
    bytes 12..15 dim, uint32 little-endian
    bytes 16..   row-major IEEE-754 float32, little-endian

Round trips are bit-exact for every finite float32 pattern, including
signed zeros and subnormals. Labels live in the manifest as JSON integer
arrays; prompt features may be stored either aggregated (one vector per
class and polarity) or raw with per-class counts, in which case the reader
aggregates them on load.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import (
    BadMagicError,
    BundleValidationError,
    LabelOutOfRangeError,
    ManifestError,
    ProtocolWarning,
    TrailingDataError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)
from ..textbank import PromptBank, aggregate

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1
_HEADER = struct.Struct("<4sIII")

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "tdha-bundle"
MANIFEST_VERSION = 1

# Full-protocol episode sampling needs up to 16 shots per class.
FULL_PROTOCOL_SHOTS = 16


def write_emb1(path: Path | str, array: np.ndarray) -> None:
    """Write a (rows, dim) float32 array in the EMB1 format."""
    arr = np.ascontiguousarray(np.asarray(array, dtype="<f4"))
    if arr.ndim != 2:
        raise BundleValidationError(f"EMB1 arrays are 2-D; got shape {arr.shape}")
    rows, dim = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EMB1_MAGIC, EMB1_VERSION, rows, dim))
        fh.write(arr.tobytes(order="C"))


def read_emb1(path: Path | str) -> np.ndarray:
    """Read an EMB1 file back into a (rows, dim) float32 array."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != EMB1_MAGIC:
        raise BadMagicError(f"{path}: not an EMB1 file")
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: header cut short")
    _, version, rows, dim = _HEADER.unpack_from(data)
    if version != EMB1_VERSION:
        raise UnsupportedVersionError(f"{path}: version {version} not supported")
    expected = _HEADER.size + rows * dim * 4
    if len(data) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(data) - _HEADER.size} bytes, header promises {rows * dim * 4}"
        )
    if len(data) > expected:
        raise TrailingDataError(f"{path}: {len(data) - expected} unexpected trailing bytes")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return flat.reshape(rows, dim).copy()


@dataclass(frozen=True)
class EmbeddingBundle:
    """In-memory dataset: image features per split plus per-class text banks."""

    dim: int
    class_names: tuple[str, ...]
    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    text_positive: np.ndarray
    text_negative: np.ndarray
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        k = len(self.class_names)
        if k < 1:
            raise BundleValidationError("bundle needs at least one class")
        if self.dim < 1:
            raise BundleValidationError("bundle dim must be >= 1")
        for name in ("train_features", "test_features", "text_positive", "text_negative"):
            arr = np.asarray(getattr(self, name), dtype=np.float32)
            if arr.ndim != 2 or arr.shape[1] != self.dim:
                raise BundleValidationError(
                    f"{name} must be (rows, {self.dim}); got shape {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise BundleValidationError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, arr)
        for bank in ("text_positive", "text_negative"):
            if getattr(self, bank).shape[0] != k:
                raise BundleValidationError(
                    f"{bank} must hold exactly {k} vectors; got {getattr(self, bank).shape[0]}"
                )
        for split in ("train", "test"):
            feats = getattr(self, f"{split}_features")
            labels = np.asarray(getattr(self, f"{split}_labels"), dtype=np.int64)
            if labels.shape != (feats.shape[0],):
                raise BundleValidationError(f"{split} labels must align with {split} features")
            if labels.size and (labels.min() < 0 or labels.max() >= k):
                raise LabelOutOfRangeError(f"{split} labels must lie in [0, {k})")
            object.__setattr__(self, f"{split}_labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "metadata", dict(self.metadata))
        for key, value in self.metadata.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise BundleValidationError("metadata must map strings to strings")
        counts = np.bincount(self.train_labels, minlength=k)
        if np.any(counts < FULL_PROTOCOL_SHOTS):
            short = np.flatnonzero(counts < FULL_PROTOCOL_SHOTS)
            warnings.warn(
                f"classes {short.tolist()} have fewer than {FULL_PROTOCOL_SHOTS} train samples; "
                "full-protocol shot counts will be infeasible",
                ProtocolWarning,
                stacklevel=2,
            )

    @property
    def class_count(self) -> int:
        return len(self.class_names)


_ARRAY_FILES = {
    "train_features": "train_features.emb1",
    "test_features": "test_features.emb1",
    "text_positive": "text_positive.emb1",
    "text_negative": "text_negative.emb1",
}


def write_bundle(bundle: EmbeddingBundle, path: Path | str) -> None:
    """Write a bundle directory (manifest.json plus EMB1 array files)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "dim": bundle.dim,
        "class_names": list(bundle.class_names),
        "metadata": bundle.metadata,
        "arrays": dict(_ARRAY_FILES),
        "labels": {
            "train": bundle.train_labels.tolist(),
            "test": bundle.test_labels.tolist(),
        },
    }
    for name, filename in _ARRAY_FILES.items():
        write_emb1(root / filename, getattr(bundle, name))
    with open(root / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_get(manifest: dict, key: str):
    if key not in manifest:
        raise ManifestError(f"manifest is missing required key {key!r}")
    return manifest[key]


def read_bundle(path: Path | str) -> EmbeddingBundle:
    """Load and fully validate a bundle directory.

    Accepts either aggregated text banks or raw per-class prompt features
    (``prompts_positive``/``prompts_negative`` arrays plus ``prompt_counts``);
    raw prompts are aggregated on load so ensembling happens in one place.
    """
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ManifestError(f"{root}: no {MANIFEST_NAME} found")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON ({exc})") from exc
    if not isinstance(manifest, dict):
        raise ManifestError(f"{manifest_path}: manifest must be a JSON object")
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"{manifest_path}: unrecognized manifest format")
    if manifest.get("version") != MANIFEST_VERSION:
        raise UnsupportedVersionError(f"{manifest_path}: manifest version not supported")

    dim = _manifest_get(manifest, "dim")
    class_names = _manifest_get(manifest, "class_names")
    arrays = _manifest_get(manifest, "arrays")
    labels = _manifest_get(manifest, "labels")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ManifestError("dim must be a positive integer")
    if not isinstance(class_names, list) or not all(isinstance(c, str) for c in class_names):
        raise ManifestError("class_names must be a list of strings")

    def load_array(name: str) -> np.ndarray:
        if name not in arrays:
            raise ManifestError(f"manifest arrays entry {name!r} is missing")
        arr = read_emb1(root / arrays[name])
        if arr.shape[1] != dim:
            raise BundleValidationError(
                f"{name} dim {arr.shape[1]} disagrees with manifest dim {dim}"
            )
        return arr

    train = load_array("train_features")
    test = load_array("test_features")

    if "text_positive" in arrays and "text_negative" in arrays:
        text_pos = load_array("text_positive")
        text_neg = load_array("text_negative")
    elif "prompts_positive" in arrays and "prompts_negative" in arrays:
        text_pos, text_neg = _aggregate_raw_prompts(manifest, class_names, load_array)
    else:
        raise ManifestError(
            "manifest must reference either aggregated text banks or raw prompt arrays"
        )

    for split in ("train", "test"):
        if split not in labels or not isinstance(labels[split], list):
            raise ManifestError(f"labels.{split} must be a JSON array")

    return EmbeddingBundle(
        dim=dim,
        class_names=tuple(class_names),
        train_features=train,
        train_labels=np.asarray(labels["train"], dtype=np.int64),
        test_features=test,
        test_labels=np.asarray(labels["test"], dtype=np.int64),
        text_positive=text_pos,
        text_negative=text_neg,
        metadata=manifest.get("metadata", {}),
    )


def _aggregate_raw_prompts(manifest: dict, class_names: list, load_array) -> tuple[np.ndarray, np.ndarray]:
    counts = _manifest_get(manifest, "prompt_counts")
    banks = []
    for polarity in ("positive", "negative"):
        if polarity not in counts or not isinstance(counts[polarity], list):
            raise ManifestError(f"prompt_counts.{polarity} must be a JSON array")
        per_class = counts[polarity]
        if len(per_class) != len(class_names):
            raise BundleValidationError(
                f"prompt_counts.{polarity} must list one count per class"
            )
        raw = load_array(f"prompts_{polarity}")
        if sum(per_class) != raw.shape[0]:
            raise BundleValidationError(
                f"prompts_{polarity} holds {raw.shape[0]} rows but counts sum to {sum(per_class)}"
            )
        groups = []
        offset = 0
        for count in per_class:
            if count < 1:
                raise BundleValidationError("every class needs at least one prompt per polarity")
            groups.append(np.asarray(raw[offset : offset + count], dtype=np.float64))
            offset += count
        banks.append(tuple(groups))
    bank = aggregate(
        PromptBank(positive=banks[0], negative=banks[1], class_names=tuple(class_names))
    )
    return bank.positive.astype(np.float32), bank.negative.astype(np.float32)
