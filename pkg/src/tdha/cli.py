"""Command-line harness.

Subcommands: eval, ablate, sweep, compare-metric, synth, geom-check.
Reports are deterministic given flags (wall-clock measurements live only
under the top-level ``timing`` key) and can be written as JSON, CSV, or
Markdown. Exit codes: 0 success, 1 usage error, 2 data error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import geomcheck
from .data.io import read_bundle, write_bundle
from .data.synthetic import generate_synthetic
from .errors import (
    BundleError,
    ConvergenceError,
    DegenerateInputError,
    DomainError,
    InsufficientSamplesError,
    InvalidInputError,
    PromptFormatError,
    ShapeError,
    TdhaError,
    UsageError,
)
from .harness import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_EPISODES,
    RunSettings,
    run_ablation,
    run_compare_metric,
    run_eval,
    run_sweep,
)
from .inference import (
    DEFAULT_ALPHA,
    DEFAULT_EPSILON,
    DEFAULT_TAU,
    FusionConfig,
    parse_components,
)
from .prototype import DEFAULT_SCALE

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

FORMATS = ("json", "csv", "md")

_DATA_ERRORS = (
    BundleError,
    InsufficientSamplesError,
    DegenerateInputError,
    DomainError,
    InvalidInputError,
    ShapeError,
    PromptFormatError,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports flag problems as UsageError (exit code 1)."""

    def error(self, message):
        raise UsageError(message)


def _parse_int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        values = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise UsageError(f"{flag} expects a comma list of integers, got {text!r}") from exc
    if not values:
        raise UsageError(f"{flag} must name at least one value")
    return values


def _parse_grid(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--grid expects start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"--grid values must be numbers, got {text!r}") from exc
    if step <= 0:
        raise UsageError("--grid step must be positive")
    if stop < start:
        raise UsageError("--grid is inverted (stop < start)")
    count = int((stop - start) / step + 1e-9) + 1
    return tuple(start + i * step for i in range(count))


def _parse_formats(text: str) -> tuple[str, ...]:
    formats = tuple(t.strip().lower() for t in text.split(",") if t.strip())
    unknown = set(formats) - set(FORMATS)
    if unknown or not formats:
        raise UsageError(f"--format accepts a comma list from {FORMATS}, got {text!r}")
    return formats


def _default_threads() -> int:
    raw = os.environ.get("TDHA_THREADS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise UsageError(f"TDHA_THREADS must be an integer, got {raw!r}") from exc
    return max(value, 1)


def _add_run_flags(p: argparse.ArgumentParser, with_components: bool = True, with_metric: bool = True):
    p.add_argument("--bundle", required=True, help="bundle directory to evaluate")
    p.add_argument("--test-bundle", default=None, help="evaluate on this bundle's test split instead")
    p.add_argument("--shots", default="1,2,4,8,16", help="comma list of shot counts")
    p.add_argument("--episodes", type=int, default=DEFAULT_EPISODES, help="episodes per shot count")
    p.add_argument("--seed", type=int, default=0, help="base seed for episode sampling")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="image-image branch weight")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="hyperbolic temperature")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="text softmax temperature")
    p.add_argument("--scale", type=float, default=DEFAULT_SCALE, help="feature preprocessing norm")
    if with_components:
        p.add_argument(
            "--components",
            default="iip+,iip-,itp+,itp-",
            help="comma list of enabled streams (iip+,iip-,itp+,itp-)",
        )
    p.add_argument("--neg-mean", choices=["ambient", "tangent"], default="ambient")
    if with_metric:
        p.add_argument("--metric", choices=["hd", "ecs"], default="hd")
    p.add_argument("--threads", type=int, default=None, help="parallel episodes (default TDHA_THREADS or 1)")
    _add_output_flags(p)


def _add_output_flags(p: argparse.ArgumentParser, default_format: str = "json"):
    p.add_argument("--output", default=None, help="report path (stem when multiple formats)")
    p.add_argument("--format", default=default_format, help="comma list from json,csv,md")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tdha", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="few-shot evaluation episodes", add_help=True)
    _add_run_flags(p_eval)
    p_eval.set_defaults(format="json")

    p_ablate = sub.add_parser("ablate", help="cumulative component ablation")
    _add_run_flags(p_ablate, with_components=False)
    p_ablate.set_defaults(format="json,md")

    p_sweep = sub.add_parser("sweep", help="accuracy over a hyperparameter grid")
    p_sweep.add_argument("--param", choices=["alpha", "epsilon", "scale"], required=True)
    p_sweep.add_argument("--grid", default=None, help="start:stop:step (alpha defaults to the standard grid)")
    _add_run_flags(p_sweep)
    p_sweep.set_defaults(format="json,csv")

    p_cmp = sub.add_parser("compare-metric", help="hyperbolic distance vs Euclidean cosine")
    _add_run_flags(p_cmp, with_metric=False)
    p_cmp.set_defaults(format="json,md")

    p_synth = sub.add_parser("synth", help="write a synthetic hierarchical bundle")
    p_synth.add_argument("--output", required=True, help="bundle directory to create")
    p_synth.add_argument("--supers", type=int, default=4)
    p_synth.add_argument("--classes-per-super", type=int, default=4)
    p_synth.add_argument("--dim", type=int, default=32)
    p_synth.add_argument("--noise-sigma", type=float, default=0.35)
    p_synth.add_argument("--modality-gap", type=float, default=0.06)
    p_synth.add_argument("--train-per-class", type=int, default=32)
    p_synth.add_argument("--test-per-class", type=int, default=100)
    p_synth.add_argument("--subclass-spread", type=float, default=0.35)
    p_synth.add_argument("--seed", type=int, default=0)

    p_geom = sub.add_parser("geom-check", help="verify the ball-geometry invariants")
    p_geom.add_argument("--seed", type=int, default=0)
    _add_output_flags(p_geom)

    return parser


def _settings_from_args(args, components: frozenset[str] | None = None, metric: str | None = None) -> RunSettings:
    try:
        config = FusionConfig(
            alpha=args.alpha,
            epsilon=args.epsilon,
            tau=args.tau,
            components=components
            if components is not None
            else parse_components(getattr(args, "components", "iip+,iip-,itp+,itp-")),
        )
        if args.scale <= 0:
            raise InvalidInputError("--scale must be positive")
        return RunSettings(
            shots=_parse_int_list(args.shots, "--shots"),
            episodes=args.episodes,
            seed=args.seed,
            config=config,
            scale=args.scale,
            neg_mean=args.neg_mean,
            metric=metric if metric is not None else getattr(args, "metric", "hd"),
            threads=args.threads if args.threads is not None else _default_threads(),
        )
    except InvalidInputError as exc:
        # Bad flag values are usage errors, not data errors.
        raise UsageError(str(exc)) from exc


def _echo_paths(report: dict, args) -> dict:
    report["config"]["bundle"] = args.bundle
    report["config"]["test_bundle"] = getattr(args, "test_bundle", None)
    return report


# --- report rendering -------------------------------------------------------


def _summary_rows(report: dict) -> tuple[list[str], list[list[str]]]:
    command = report["command"]
    if command == "eval":
        header = ["shots", "mean_accuracy", "std_accuracy", "episodes"]
        rows = [
            [str(r["shots"]), f"{r['mean_accuracy']:.4f}", f"{r['std_accuracy']:.4f}", str(len(r["episode_accuracies"]))]
            for r in report["results"]
        ]
    elif command == "ablate":
        header = ["components", "shots", "mean_accuracy", "std_accuracy"]
        rows = [
            ["+".join(row["components"]), str(r["shots"]), f"{r['mean_accuracy']:.4f}", f"{r['std_accuracy']:.4f}"]
            for row in report["rows"]
            for r in row["results"]
        ]
    elif command == "sweep":
        header = [report["param"], "shots", "mean_accuracy", "std_accuracy"]
        rows = [
            [str(point["value"]), str(r["shots"]), f"{r['mean_accuracy']:.4f}", f"{r['std_accuracy']:.4f}"]
            for point in report["points"]
            for r in point["results"]
        ]
    elif command == "compare-metric":
        header = ["metric", "shots", "mean_accuracy", "std_accuracy"]
        rows = [
            [variant["metric"], str(r["shots"]), f"{r['mean_accuracy']:.4f}", f"{r['std_accuracy']:.4f}"]
            for variant in report["variants"]
            for r in variant["results"]
        ]
    elif command == "geom-check":
        header = ["check", "samples", "max_error", "tolerance", "passed"]
        rows = [
            [c["name"], str(c["samples"]), f"{c['max_error']:.3e}", f"{c['tolerance']:.0e}", "pass" if c["passed"] else "FAIL"]
            for c in report["checks"]
        ]
    else:
        raise AssertionError(f"no renderer for command {command!r}")
    return header, rows


def _csv_rows(report: dict) -> tuple[list[str], list[list]]:
    # Full-precision values; the 4-decimal rounding is only for human tables.
    command = report["command"]
    if command == "eval":
        header = ["shots", "episode", "accuracy"]
        rows = [
            [r["shots"], e, acc]
            for r in report["results"]
            for e, acc in enumerate(r["episode_accuracies"])
        ]
    elif command == "ablate":
        header = ["components", "shots", "mean_accuracy", "std_accuracy"]
        rows = [
            ["+".join(row["components"]), r["shots"], r["mean_accuracy"], r["std_accuracy"]]
            for row in report["rows"]
            for r in row["results"]
        ]
    elif command == "sweep":
        header = [report["param"], "shots", "mean_accuracy", "std_accuracy"]
        rows = [
            [point["value"], r["shots"], r["mean_accuracy"], r["std_accuracy"]]
            for point in report["points"]
            for r in point["results"]
        ]
    elif command == "compare-metric":
        header = ["metric", "shots", "mean_accuracy", "std_accuracy"]
        rows = [
            [variant["metric"], r["shots"], r["mean_accuracy"], r["std_accuracy"]]
            for variant in report["variants"]
            for r in variant["results"]
        ]
    elif command == "geom-check":
        header = ["check", "samples", "max_error", "tolerance", "passed"]
        rows = [
            [c["name"], c["samples"], c["max_error"], c["tolerance"], c["passed"]]
            for c in report["checks"]
        ]
    else:
        raise AssertionError(f"no renderer for command {command!r}")
    return header, rows


def render_csv(report: dict) -> str:
    header, rows = _csv_rows(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_markdown(report: dict) -> str:
    header, rows = _summary_rows(report)
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


_RENDERERS = {"json": render_json, "csv": render_csv, "md": render_markdown}


def write_report(report: dict, output: str | None, formats: tuple[str, ...]) -> list[Path]:
    if output is None:
        return []
    base = Path(output)
    written = []
    for fmt in formats:
        if len(formats) == 1:
            path = base
        else:
            path = base.with_suffix(f".{fmt}") if base.suffix else base.parent / f"{base.name}.{fmt}"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(_RENDERERS[fmt](report), encoding="utf-8")
        written.append(path)
    return written


def _finish(report: dict, args) -> int:
    formats = _parse_formats(args.format)
    written = write_report(report, args.output, formats)
    header, rows = _summary_rows(report)
    print(f"[{report['command']}] " + ", ".join(f"{k}={v}" for k, v in report.get("config", {}).items() if k in ("seed", "metric")))
    print("  " + " | ".join(header))
    for row in rows:
        print("  " + " | ".join(row))
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# --- commands ----------------------------------------------------------------


def _cmd_eval(args) -> int:
    settings = _settings_from_args(args)
    bundle = read_bundle(args.bundle)
    eval_bundle = read_bundle(args.test_bundle) if args.test_bundle else None
    report = _echo_paths(run_eval(bundle, settings, eval_bundle), args)
    return _finish(report, args)


def _cmd_ablate(args) -> int:
    settings = _settings_from_args(args)
    bundle = read_bundle(args.bundle)
    report = _echo_paths(run_ablation(bundle, settings), args)
    return _finish(report, args)


def _cmd_sweep(args) -> int:
    settings = _settings_from_args(args)
    if args.grid is not None:
        grid = _parse_grid(args.grid)
    elif args.param == "alpha":
        grid = DEFAULT_ALPHA_GRID
    else:
        raise UsageError(f"--grid is required when sweeping {args.param}")
    bundle = read_bundle(args.bundle)
    report = _echo_paths(run_sweep(bundle, settings, args.param, grid), args)
    return _finish(report, args)


def _cmd_compare_metric(args) -> int:
    settings = _settings_from_args(args, metric="hd")
    bundle = read_bundle(args.bundle)
    report = _echo_paths(run_compare_metric(bundle, settings), args)
    return _finish(report, args)


def _cmd_synth(args) -> int:
    if args.dim < 2:
        raise UsageError("--dim must be >= 2")
    bundle = generate_synthetic(
        classes_per_super=args.classes_per_super,
        super_count=args.supers,
        dim=args.dim,
        noise_sigma=args.noise_sigma,
        modality_gap=args.modality_gap,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        seed=args.seed,
        subclass_spread=args.subclass_spread,
    )
    write_bundle(bundle, args.output)
    print(
        f"wrote synthetic bundle: {bundle.class_count} classes, dim {bundle.dim}, "
        f"{bundle.train_features.shape[0]} train / {bundle.test_features.shape[0]} test -> {args.output}"
    )
    return EXIT_OK


def _cmd_geom_check(args) -> int:
    report = geomcheck.run_geometry_checks(seed=args.seed)
    code = EXIT_OK if report["passed"] else EXIT_INTERNAL
    _finish(report, args)
    if not report["passed"]:
        print("geometry invariant violation detected", file=sys.stderr)
    return code


_COMMANDS = {
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "sweep": _cmd_sweep,
    "compare-metric": _cmd_compare_metric,
    "synth": _cmd_synth,
    "geom-check": _cmd_geom_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except TdhaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
