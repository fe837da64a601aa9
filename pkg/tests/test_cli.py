import json
from pathlib import Path

import numpy as np
import pytest

from wavedistill.cli import main

GEN_CONFIG = {
    "seed": 3,
    "n_train": 300,
    "n_test": 100,
    "dim": 64,
    "levels": 3,
}


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture
def pipeline_dirs(tmp_path):
    cfg = write_config(tmp_path / "gen.json", GEN_CONFIG)
    data_dir = tmp_path / "data"
    assert run(["gen", "--config", cfg, "--out", data_dir]) == 0

    teach_cfg = write_config(tmp_path / "teach.json", {
        "seed": 3, "data_dir": str(data_dir), "epochs": 6, "batch_size": 32,
    })
    teach_dir = tmp_path / "teacher"
    assert run(["train-teacher", "--config", teach_cfg, "--out", teach_dir]) == 0
    return tmp_path, data_dir, teach_dir


class TestGen:
    def test_artifacts_and_manifest(self, tmp_path):
        cfg = write_config(tmp_path / "gen.json", GEN_CONFIG)
        out = tmp_path / "data"
        assert run(["gen", "--config", cfg, "--out", out]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        for name in manifest["artifacts"]:
            target = out / name
            assert target.exists() and target.stat().st_size > 0
        assert np.load(out / "x_train.npy").shape == (300, 64)

    def test_rerun_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path / "gen.json", GEN_CONFIG)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(["gen", "--config", cfg, "--out", out_a]) == 0
        assert run(["gen", "--config", cfg, "--out", out_b]) == 0
        for name in ("x_train.npy", "y_train.npy", "x_test.npy",
                     "y_test.npy", "groundtruth.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_seed_override_changes_data(self, tmp_path):
        cfg = write_config(tmp_path / "gen.json", GEN_CONFIG)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(["gen", "--config", cfg, "--out", out_a]) == 0
        assert run(["gen", "--config", cfg, "--out", out_b,
                    "--seed", "99"]) == 0
        assert ((out_a / "x_train.npy").read_bytes()
                != (out_b / "x_train.npy").read_bytes())

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "gen.json",
                           dict(GEN_CONFIG, typo_key=1))
        assert run(["gen", "--config", cfg, "--out", tmp_path / "x"]) == 1
        assert "typo_key" in capsys.readouterr().err


class TestPipeline:
    def test_teacher_metrics(self, pipeline_dirs):
        _, _, teach_dir = pipeline_dirs
        metrics = json.loads((teach_dir / "teacher_metrics.json").read_text())
        assert 0.0 < metrics["test_r2"] <= 1.0

    def test_distill_then_eval(self, pipeline_dirs):
        tmp_path, data_dir, teach_dir = pipeline_dirs
        distill_cfg = write_config(tmp_path / "distill.json", {
            "seed": 3,
            "data_dir": str(data_dir),
            "teacher": str(teach_dir / "teacher.json"),
            "init": "db5_noise",
            "lambda_grid": [0.005],
            "gamma_grid": [0.01],
            "epochs": 2,
            "batch_size": 128,
            "levels": 3,
        })
        distill_dir = tmp_path / "distill"
        assert run(["distill", "--config", distill_cfg,
                    "--out", distill_dir]) == 0
        manifest = json.loads((distill_dir / "sweep_manifest.json").read_text())
        assert len(manifest["cells"]) == 1
        filter_file = distill_dir / manifest["cells"][0]["filter_file"]
        assert filter_file.exists()
        log_lines = (distill_dir
                     / "cell_000_log.csv").read_text().strip().splitlines()
        assert len(log_lines) == 3  # header + 2 epochs

        eval_cfg = write_config(tmp_path / "eval.json", {
            "seed": 3,
            "filters": str(filter_file),
            "reference": "db5",
            "data_dir": str(data_dir),
            "teacher": str(teach_dir / "teacher.json"),
            "levels": 3,
            "max_signals": 40,
        })
        eval_dir = tmp_path / "eval"
        assert run(["eval", "--config", eval_cfg, "--out", eval_dir]) == 0
        report = json.loads((eval_dir / "eval_report.json").read_text())
        assert report["wavelet_distance"] > 0
        assert set(report["compression_rate"]) == {"learned", "reference"}
        assert (eval_dir / "psi_learned.csv").exists()

    def test_eval_identical_filters_zero_distance(self, tmp_path):
        cfg = write_config(tmp_path / "eval.json", {
            "seed": 0, "filters": "db5", "reference": "db5",
        })
        out = tmp_path / "eval"
        assert run(["eval", "--config", cfg, "--out", out]) == 0
        report = json.loads((out / "eval_report.json").read_text())
        assert report["wavelet_distance"] == 0.0

    def test_eval_activation_map(self, tmp_path):
        cfg = write_config(tmp_path / "eval.json", {
            "seed": 1, "filters": "haar", "reference": "haar",
            "activation": {"size": 8, "top_k": 10, "steps": 4, "levels": 2},
        })
        out = tmp_path / "eval_act"
        assert run(["eval", "--config", cfg, "--out", out]) == 0
        rows = (out / "activation_map.csv").read_text().strip().splitlines()
        assert len(rows) == 8


class TestPeakcount:
    def test_two_class_run(self, tmp_path):
        cfg = write_config(tmp_path / "pc.json", {
            "seed": 5,
            "size": 24,
            "n_maps_per_class": 16,
            "n_bumps": 15,
            "classes": [
                {"label": "low", "amp_mean": 1.0, "amp_sigma": 0.1},
                {"label": "high", "amp_mean": 2.0, "amp_sigma": 0.1},
            ],
            "filter": "laplace",
        })
        out = tmp_path / "pc"
        assert run(["peakcount", "--config", cfg, "--out", out]) == 0
        metrics = json.loads((out / "peakcount_metrics.json").read_text())
        assert metrics["test_accuracy"] >= 0.5
        confusion = (out / "confusion.csv").read_text().splitlines()
        assert confusion[0] == "actual,low,high"

    def test_subfilter_variant(self, tmp_path):
        cfg = write_config(tmp_path / "pc.json", {
            "seed": 6,
            "size": 24,
            "n_maps_per_class": 12,
            "n_bumps": 12,
            "classes": [
                {"label": "low", "amp_mean": 1.0},
                {"label": "high", "amp_mean": 2.2},
            ],
            "filter": "subfilter",
            "filters_file": "db5",
            "subfilter_band": "hh",
        })
        out = tmp_path / "pc_sub"
        assert run(["peakcount", "--config", cfg, "--out", out]) == 0
        assert (out / "class_models.json").exists()


class TestBench:
    def test_bench_reports_backends(self, tmp_path):
        cfg = write_config(tmp_path / "bench.json", {"seed": 0, "reps": 2})
        out = tmp_path / "bench"
        assert run(["bench", "--config", cfg, "--out", out]) == 0
        table = (out / "bench.csv").read_text()
        assert "kernel_analysis[python]" in table
        assert "teacher_forward" in table


def test_missing_required_key(tmp_path, capsys):
    cfg = write_config(tmp_path / "bad.json", {"epochs": 4})
    assert run(["train-teacher", "--config", cfg,
                "--out", tmp_path / "o"]) == 1
    err = capsys.readouterr().err
    assert "seed" in err and "data_dir" in err
