"""Bundle I/O, episode sampling, and synthetic data generation."""

from .io import (
    EMB1_MAGIC,
    EMB1_VERSION,
    EmbeddingBundle,
    read_bundle,
    read_emb1,
    write_bundle,
    write_emb1,
)
from .sampling import PROTOCOL_SHOTS, EpisodeSpec, sample_episode
from .synthetic import generate_synthetic

__all__ = [
    "EMB1_MAGIC",
    "EMB1_VERSION",
    "EmbeddingBundle",
    "EpisodeSpec",
    "PROTOCOL_SHOTS",
    "generate_synthetic",
    "read_bundle",
    "read_emb1",
    "sample_episode",
    "write_bundle",
    "write_emb1",
]
