import json
from pathlib import Path

import jsonschema
import pytest

from tdha.cli import main

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report.schema.json").read_text())


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("bundles") / "toy"
    code = main(
        [
            "synth", "--output", str(path), "--supers", "2", "--classes-per-super", "2",
            "--dim", "8", "--noise-sigma", "0.2", "--modality-gap", "0.1",
            "--train-per-class", "8", "--test-per-class", "10", "--seed", "11",
        ]
    )
    assert code == 0
    return path


@pytest.fixture(scope="module")
def clean_bundle_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("bundles") / "clean"
    code = main(
        [
            "synth", "--output", str(path), "--supers", "2", "--classes-per-super", "2",
            "--dim", "8", "--noise-sigma", "0", "--modality-gap", "0",
            "--train-per-class", "4", "--test-per-class", "5", "--seed", "3",
        ]
    )
    assert code == 0
    return path


def read_report(path):
    report = json.loads(Path(path).read_text())
    jsonschema.validate(report, SCHEMA)
    return report


def canonical(report):
    report = dict(report)
    report.pop("timing", None)
    return json.dumps(report, sort_keys=True)


class TestSynth:
    def test_bundle_is_readable(self, bundle_dir):
        from tdha.data.io import read_bundle

        bundle = read_bundle(bundle_dir)
        assert bundle.class_count == 4
        assert bundle.metadata["seed"] == "11"

    def test_deterministic_output(self, tmp_path, bundle_dir):
        again = tmp_path / "again"
        assert main(
            [
                "synth", "--output", str(again), "--supers", "2", "--classes-per-super", "2",
                "--dim", "8", "--noise-sigma", "0.2", "--modality-gap", "0.1",
                "--train-per-class", "8", "--test-per-class", "10", "--seed", "11",
            ]
        ) == 0
        for name in ("train_features.emb1", "test_features.emb1", "manifest.json"):
            assert (again / name).read_bytes() == (bundle_dir / name).read_bytes()

    def test_refuses_dim_below_two(self, tmp_path):
        assert main(["synth", "--output", str(tmp_path / "x"), "--dim", "1"]) == 1


class TestEval:
    def test_basic_run_writes_valid_report(self, bundle_dir, tmp_path):
        out = tmp_path / "report.json"
        code = main(
            ["eval", "--bundle", str(bundle_dir), "--shots", "1,2", "--episodes", "2",
             "--seed", "0", "--output", str(out)]
        )
        assert code == 0
        report = read_report(out)
        assert report["command"] == "eval"
        assert report["config"]["bundle"] == str(bundle_dir)
        assert [r["shots"] for r in report["results"]] == [1, 2]

    def test_byte_identical_reports_modulo_timing(self, bundle_dir, tmp_path):
        flags = ["eval", "--bundle", str(bundle_dir), "--shots", "1,4", "--episodes", "3", "--seed", "9"]
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(flags + ["--output", str(a)]) == 0
        assert main(flags + ["--output", str(b)]) == 0
        ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
        assert canonical(ra).encode() == canonical(rb).encode()
        # Timing keys are the only permitted difference.
        assert set(ra) == set(rb)

    def test_text_only_constant_across_shots(self, bundle_dir, tmp_path):
        out = tmp_path / "itp.json"
        assert main(
            ["eval", "--bundle", str(bundle_dir), "--components", "itp+",
             "--shots", "1,2,4,8", "--episodes", "2", "--output", str(out)]
        ) == 0
        means = {r["mean_accuracy"] for r in read_report(out)["results"]}
        assert len(means) == 1

    def test_noise_free_bundle_perfect(self, clean_bundle_dir, tmp_path):
        out = tmp_path / "clean.json"
        assert main(
            ["eval", "--bundle", str(clean_bundle_dir), "--shots", "1,4",
             "--episodes", "2", "--output", str(out)]
        ) == 0
        for res in read_report(out)["results"]:
            assert res["episode_accuracies"] == [1.0, 1.0]

    def test_test_bundle_override(self, bundle_dir, clean_bundle_dir, tmp_path):
        out = tmp_path / "dg.json"
        code = main(
            ["eval", "--bundle", str(bundle_dir), "--test-bundle", str(bundle_dir),
             "--shots", "1", "--episodes", "1", "--output", str(out)]
        )
        assert code == 0
        assert read_report(out)["config"]["test_bundle"] == str(bundle_dir)

    def test_unreadable_bundle_is_data_error(self, tmp_path):
        assert main(["eval", "--bundle", str(tmp_path / "missing")]) == 2

    def test_infeasible_shots_is_data_error(self, bundle_dir):
        assert main(["eval", "--bundle", str(bundle_dir), "--shots", "64"]) == 2

    def test_bad_component_is_usage_error(self, bundle_dir):
        assert main(["eval", "--bundle", str(bundle_dir), "--components", "bogus"]) == 1

    def test_bad_flag_is_usage_error(self):
        assert main(["eval", "--no-such-flag"]) == 1

    def test_negative_alpha_is_usage_error(self, bundle_dir):
        assert main(["eval", "--bundle", str(bundle_dir), "--alpha", "-1"]) == 1

    def test_csv_format(self, bundle_dir, tmp_path):
        out = tmp_path / "eval.csv"
        assert main(
            ["eval", "--bundle", str(bundle_dir), "--shots", "1,2", "--episodes", "2",
             "--output", str(out), "--format", "csv"]
        ) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "shots,episode,accuracy"
        assert len(lines) == 1 + 2 * 2

    def test_neg_mean_and_metric_flags(self, bundle_dir, tmp_path):
        for extra in (["--neg-mean", "tangent"], ["--metric", "ecs"]):
            out = tmp_path / f"run{extra[1]}.json"
            assert main(
                ["eval", "--bundle", str(bundle_dir), "--shots", "2", "--episodes", "1",
                 "--output", str(out)] + extra
            ) == 0
            config = read_report(out)["config"]
            key, value = extra[0].lstrip("-").replace("-", "_"), extra[1]
            assert config[key] == value

    def test_threads_env_fallback(self, bundle_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("TDHA_THREADS", "3")
        out1, out2 = tmp_path / "t3.json", tmp_path / "t1.json"
        flags = ["eval", "--bundle", str(bundle_dir), "--shots", "1,2", "--episodes", "2", "--seed", "4"]
        assert main(flags + ["--output", str(out1)]) == 0
        monkeypatch.delenv("TDHA_THREADS")
        assert main(flags + ["--output", str(out2), "--threads", "1"]) == 0
        assert canonical(json.loads(out1.read_text())) == canonical(json.loads(out2.read_text()))

    def test_invalid_threads_env_is_usage_error(self, bundle_dir, monkeypatch):
        monkeypatch.setenv("TDHA_THREADS", "many")
        assert main(["eval", "--bundle", str(bundle_dir), "--shots", "1"]) == 1


class TestAblate:
    def test_matches_standalone_first_row(self, bundle_dir, tmp_path):
        ablate_out = tmp_path / "ablate"
        assert main(
            ["ablate", "--bundle", str(bundle_dir), "--shots", "1,2", "--episodes", "2",
             "--seed", "7", "--output", str(ablate_out), "--format", "json,md"]
        ) == 0
        report = read_report(ablate_out.with_suffix(".json"))
        assert (ablate_out.with_suffix(".md")).exists()

        eval_out = tmp_path / "itp.json"
        assert main(
            ["eval", "--bundle", str(bundle_dir), "--components", "itp+", "--shots", "1,2",
             "--episodes", "2", "--seed", "7", "--output", str(eval_out)]
        ) == 0
        standalone = read_report(eval_out)
        assert report["rows"][0]["results"] == standalone["results"]

    def test_four_cumulative_rows(self, bundle_dir, tmp_path):
        out = tmp_path / "rows"
        assert main(
            ["ablate", "--bundle", str(bundle_dir), "--shots", "1", "--episodes", "1",
             "--output", str(out), "--format", "json"]
        ) == 0
        rows = read_report(out)["rows"]
        assert [row["components"] for row in rows] == [
            ["itp+"],
            ["itp+", "itp-"],
            ["itp+", "itp-", "iip+"],
            ["itp+", "itp-", "iip+", "iip-"],
        ]


class TestSweep:
    def test_default_alpha_grid(self, bundle_dir, tmp_path):
        out = tmp_path / "sweep"
        assert main(
            ["sweep", "--param", "alpha", "--bundle", str(bundle_dir), "--shots", "1",
             "--episodes", "2", "--seed", "2", "--output", str(out), "--format", "json,csv"]
        ) == 0
        report = read_report(out.with_suffix(".json"))
        assert [p["value"] for p in report["points"]] == [0.0, 0.4, 0.8, 1.2, 1.6, 2.0]
        csv_text = out.with_suffix(".csv").read_text()
        assert csv_text.splitlines()[0] == "alpha,shots,mean_accuracy,std_accuracy"

    def test_alpha_zero_equals_text_fused_eval(self, bundle_dir, tmp_path):
        sweep_out = tmp_path / "s.json"
        assert main(
            ["sweep", "--param", "alpha", "--grid", "0:0:1", "--bundle", str(bundle_dir),
             "--shots", "2", "--episodes", "2", "--seed", "6", "--output", str(sweep_out),
             "--format", "json"]
        ) == 0
        eval_out = tmp_path / "e.json"
        assert main(
            ["eval", "--bundle", str(bundle_dir), "--components", "itp+,itp-", "--shots", "2",
             "--episodes", "2", "--seed", "6", "--output", str(eval_out)]
        ) == 0
        sweep = read_report(sweep_out)
        text_only = read_report(eval_out)
        assert sweep["points"][0]["results"] == text_only["results"]

    def test_grid_required_for_non_alpha(self, bundle_dir):
        assert main(["sweep", "--param", "epsilon", "--bundle", str(bundle_dir)]) == 1

    def test_inverted_grid_is_usage_error(self, bundle_dir):
        assert main(
            ["sweep", "--param", "alpha", "--grid", "2:1:0.5", "--bundle", str(bundle_dir)]
        ) == 1

    def test_zero_step_is_usage_error(self, bundle_dir):
        assert main(
            ["sweep", "--param", "alpha", "--grid", "0:1:0", "--bundle", str(bundle_dir)]
        ) == 1


class TestCompareMetric:
    def test_writes_both_variants(self, bundle_dir, tmp_path):
        out = tmp_path / "cmp"
        assert main(
            ["compare-metric", "--bundle", str(bundle_dir), "--shots", "1,2",
             "--episodes", "2", "--output", str(out), "--format", "json,md"]
        ) == 0
        report = read_report(out.with_suffix(".json"))
        assert [v["metric"] for v in report["variants"]] == ["hd", "ecs"]

    def test_noise_free_both_perfect(self, clean_bundle_dir, tmp_path):
        out = tmp_path / "cmp.json"
        assert main(
            ["compare-metric", "--bundle", str(clean_bundle_dir), "--shots", "1",
             "--episodes", "1", "--output", str(out), "--format", "json"]
        ) == 0
        for variant in read_report(out)["variants"]:
            assert variant["results"][0]["episode_accuracies"] == [1.0]


class TestGeomCheck:
    def test_passes_and_validates(self, tmp_path):
        out = tmp_path / "geom.json"
        assert main(["geom-check", "--seed", "1", "--output", str(out)]) == 0
        report = read_report(out)
        assert report["passed"]

    def test_invariant_violation_exits_three(self, monkeypatch):
        import tdha.cli as cli_module

        def broken_suite(seed=0):
            return {
                "command": "geom-check",
                "config": {"seed": seed},
                "checks": [
                    {"name": "triangle_inequality", "samples": 1, "max_error": 1.0,
                     "tolerance": 1e-9, "passed": False}
                ],
                "passed": False,
            }

        monkeypatch.setattr(cli_module.geomcheck, "run_geometry_checks", broken_suite)
        assert main(["geom-check"]) == 3

    def test_md_format(self, tmp_path):
        out = tmp_path / "geom.md"
        assert main(["geom-check", "--output", str(out), "--format", "md"]) == 0
        text = out.read_text()
        assert text.startswith("| check |")

    def test_bad_format_is_usage_error(self, tmp_path):
        assert main(["geom-check", "--format", "yaml"]) == 1
