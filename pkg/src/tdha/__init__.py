"""Training-free dual hyperbolic adapters over precomputed embeddings.

Few-shot classification that embeds class prototypes in the Poincare ball
and fuses four prediction streams: hyperbolic distance to positive and
negative image prototypes, plus cosine similarity to positive and negated
text prompts.
"""

from .data import (
    EmbeddingBundle,
    EpisodeSpec,
    generate_synthetic,
    read_bundle,
    sample_episode,
    write_bundle,
)
from .inference import (
    FusionConfig,
    PredictionVector,
    classify_batch,
    fuse_final,
    fuse_image_image,
    fuse_image_text,
    predict_hyperbolic_negative,
    predict_hyperbolic_positive,
    predict_text,
)
from .poincare import (
    ambient_mean,
    conformal_factor,
    distance,
    exp_map_origin,
    frechet_mean_oracle,
    log_map_origin,
    tangent_mean,
)
from .prototype import (
    PrototypeSet,
    SupportSet,
    build_negative,
    build_positive,
    build_prototype_set,
    preprocess_feature,
)
from .textbank import PromptBank, TextBank, aggregate, negate_prompt_text

__version__ = "0.1.0"

__all__ = [
    "EmbeddingBundle",
    "EpisodeSpec",
    "FusionConfig",
    "PredictionVector",
    "PromptBank",
    "PrototypeSet",
    "SupportSet",
    "TextBank",
    "aggregate",
    "ambient_mean",
    "build_negative",
    "build_positive",
    "build_prototype_set",
    "classify_batch",
    "conformal_factor",
    "distance",
    "exp_map_origin",
    "frechet_mean_oracle",
    "fuse_final",
    "fuse_image_image",
    "fuse_image_text",
    "generate_synthetic",
    "log_map_origin",
    "negate_prompt_text",
    "predict_hyperbolic_negative",
    "predict_hyperbolic_positive",
    "predict_text",
    "preprocess_feature",
    "read_bundle",
    "sample_episode",
    "tangent_mean",
    "write_bundle",
]
