"""Episode evaluation: accuracy runs, ablations, sweeps, metric comparisons.

Every run is a pure function of (bundle, flags): support sets are drawn
from streams keyed by (seed, episode_index, class name) and the negative
draw is re-keyed per episode, so two runs with the same flags produce the
same numbers regardless of thread count. Reports are JSON-ready dicts with
all wall-clock measurements confined to a single top-level ``timing`` key.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .data.io import EmbeddingBundle
from .data.sampling import EpisodeSpec, sample_episode
from .errors import InvalidInputError, ShapeError
from .inference import FusionConfig, classify_batch
from .prototype import DEFAULT_SCALE, build_prototype_set
from .seeding import derive_seed
from .textbank import TextBank

ABLATION_ROWS = (
    ("itp+",),
    ("itp+", "itp-"),
    ("itp+", "itp-", "iip+"),
    ("itp+", "itp-", "iip+", "iip-"),
)

SWEEP_PARAMS = ("alpha", "epsilon", "scale")

DEFAULT_ALPHA_GRID = (0.0, 0.4, 0.8, 1.2, 1.6, 2.0)

DEFAULT_EPISODES = 3


@dataclass(frozen=True)
class RunSettings:
    """Everything but the bundle that determines an evaluation run."""

    shots: tuple[int, ...] = (1, 2, 4, 8, 16)
    episodes: int = DEFAULT_EPISODES
    seed: int = 0
    config: FusionConfig = FusionConfig()
    scale: float = DEFAULT_SCALE
    neg_mean: str = "ambient"
    metric: str = "hd"
    threads: int = 1

    def __post_init__(self):
        if self.episodes < 1:
            raise InvalidInputError("episodes must be >= 1")
        if not self.shots:
            raise InvalidInputError("at least one shot count is required")
        if self.threads < 1:
            raise InvalidInputError("threads must be >= 1")

    def echo(self) -> dict:
        """Flag echo for reports (deterministic key order via JSON sorting)."""
        return {
            "alpha": float(self.config.alpha),
            "epsilon": float(self.config.epsilon),
            "tau": float(self.config.tau),
            "scale": float(self.scale),
            "shots": list(self.shots),
            "episodes": self.episodes,
            "seed": self.seed,
            "components": sorted(self.config.components),
            "neg_mean": self.neg_mean,
            "metric": self.metric,
        }


def bundle_text_bank(bundle: EmbeddingBundle) -> TextBank:
    """Unit-normalized view of a bundle's aggregated text features."""
    pos = np.asarray(bundle.text_positive, dtype=np.float64)
    neg = np.asarray(bundle.text_negative, dtype=np.float64)
    pos_norm = np.linalg.norm(pos, axis=-1, keepdims=True)
    neg_norm = np.linalg.norm(neg, axis=-1, keepdims=True)
    if np.any(pos_norm == 0.0) or np.any(neg_norm == 0.0):
        raise InvalidInputError("bundle text features contain a zero vector")
    return TextBank(positive=pos / pos_norm, negative=neg / neg_norm, class_names=bundle.class_names)


def episode_accuracy(
    bundle: EmbeddingBundle,
    spec: EpisodeSpec,
    settings: RunSettings,
    eval_bundle: EmbeddingBundle | None = None,
) -> tuple[float, int]:
    """Top-1 accuracy of one episode; returns (accuracy, items classified).

    ``eval_bundle`` swaps in another bundle's test split (domain
    generalization); prototypes and text banks still come from ``bundle``.
    """
    target = eval_bundle if eval_bundle is not None else bundle
    if eval_bundle is not None:
        if eval_bundle.class_count != bundle.class_count:
            raise ShapeError("evaluation bundle must have the same class count")
        if eval_bundle.dim != bundle.dim:
            raise ShapeError("evaluation bundle must have the same feature dim")

    support = sample_episode(bundle, spec)
    negative_seed = derive_seed(spec.seed, "negatives", spec.episode_index)
    prototypes = build_prototype_set(
        support,
        scale=settings.scale,
        seed=negative_seed,
        mean_mode=settings.neg_mean,
        geometry="hyperbolic" if settings.metric == "hd" else "euclidean",
    )
    bank = bundle_text_bank(bundle)
    results = classify_batch(
        np.asarray(target.test_features, dtype=np.float64),
        prototypes,
        bank,
        settings.config,
        scale=settings.scale,
        metric=settings.metric,
    )
    predicted = np.array([cls for cls, _ in results], dtype=np.int64)
    correct = predicted == target.test_labels
    return float(np.mean(correct)), int(predicted.size)


def _eval_series(
    bundle: EmbeddingBundle,
    settings: RunSettings,
    eval_bundle: EmbeddingBundle | None,
) -> tuple[list[dict], int, float]:
    """Per-shot episode accuracies plus (items classified, elapsed seconds)."""
    jobs = [
        (shots, episode)
        for shots in settings.shots
        for episode in range(settings.episodes)
    ]

    def run(job: tuple[int, int]) -> tuple[float, int]:
        shots, episode = job
        spec = EpisodeSpec(shots=shots, seed=settings.seed, episode_index=episode)
        return episode_accuracy(bundle, spec, settings, eval_bundle)

    started = time.perf_counter()
    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]
    elapsed = time.perf_counter() - started

    items = sum(count for _, count in outcomes)
    results = []
    cursor = 0
    for shots in settings.shots:
        accs = [outcomes[cursor + e][0] for e in range(settings.episodes)]
        cursor += settings.episodes
        results.append(
            {
                "shots": shots,
                "episode_accuracies": accs,
                "mean_accuracy": float(np.mean(accs)),
                "std_accuracy": float(np.std(accs)),
            }
        )
    return results, items, elapsed


def _timing(items: int, elapsed: float) -> dict:
    return {
        "total_seconds": elapsed,
        "items_classified": items,
        "seconds_per_item": elapsed / items if items else 0.0,
    }


def run_eval(
    bundle: EmbeddingBundle,
    settings: RunSettings,
    eval_bundle: EmbeddingBundle | None = None,
) -> dict:
    """Accuracy per shot count over seeded episodes."""
    results, items, elapsed = _eval_series(bundle, settings, eval_bundle)
    return {
        "command": "eval",
        "config": settings.echo(),
        "results": results,
        "timing": _timing(items, elapsed),
    }


def run_ablation(bundle: EmbeddingBundle, settings: RunSettings) -> dict:
    """The four cumulative component configurations, on paired episodes."""
    rows = []
    items = 0
    elapsed = 0.0
    for components in ABLATION_ROWS:
        row_settings = replace(
            settings, config=replace(settings.config, components=frozenset(components))
        )
        results, row_items, row_elapsed = _eval_series(bundle, row_settings, None)
        items += row_items
        elapsed += row_elapsed
        rows.append({"components": list(components), "results": results})
    return {
        "command": "ablate",
        "config": settings.echo(),
        "rows": rows,
        "timing": _timing(items, elapsed),
    }


def run_sweep(
    bundle: EmbeddingBundle,
    settings: RunSettings,
    param: str,
    grid: tuple[float, ...],
) -> dict:
    """Accuracy series over a hyperparameter grid, paired across grid points."""
    if param not in SWEEP_PARAMS:
        raise InvalidInputError(f"sweep parameter must be one of {SWEEP_PARAMS}")
    if not grid:
        raise InvalidInputError("sweep grid is empty")
    points = []
    items = 0
    elapsed = 0.0
    for value in grid:
        if param == "scale":
            point_settings = replace(settings, scale=float(value))
        else:
            point_settings = replace(
                settings, config=replace(settings.config, **{param: float(value)})
            )
        results, point_items, point_elapsed = _eval_series(bundle, point_settings, None)
        items += point_items
        elapsed += point_elapsed
        points.append({"value": float(value), "results": results})
    return {
        "command": "sweep",
        "config": settings.echo(),
        "param": param,
        "points": points,
        "timing": _timing(items, elapsed),
    }


def run_compare_metric(bundle: EmbeddingBundle, settings: RunSettings) -> dict:
    """Hyperbolic-distance vs Euclidean-cosine image-image streams, paired."""
    variants = []
    items = 0
    elapsed = 0.0
    for metric in ("hd", "ecs"):
        variant_settings = replace(settings, metric=metric)
        results, v_items, v_elapsed = _eval_series(bundle, variant_settings, None)
        items += v_items
        elapsed += v_elapsed
        variants.append({"metric": metric, "results": results})
    return {
        "command": "compare-metric",
        "config": settings.echo(),
        "variants": variants,
        "timing": _timing(items, elapsed),
    }
