import json

import numpy as np
import pytest

from subclust.autoencoder import TrainConfig
from subclust.cli import main
from subclust.data import SyntheticSpec
from subclust.pipeline import (
    PipelineError,
    RunConfig,
    RunReport,
    emit_report,
    load_dataset,
    resolve_ipd_dim,
    run_ablation,
    run_benchmark,
    run_pipeline,
)


def tiny_cfg(**overrides):
    """A fast configuration: tiny synthetic data and short training."""
    base = dict(
        synth=SyntheticSpec(3, 2, 12, 10, noise_sigma=0.0, seed=0),
        normalization="unit_column",
        ipd_dim=3,
        train=TrainConfig(
            pretrain_epochs=20,
            max_finetune_epochs=60,
            stop_warmup_epochs=60,
            seed=0,
        ),
    )
    base.update(overrides)
    return RunConfig(**base)


class TestRunConfig:
    def test_mutually_exclusive_variants(self):
        with pytest.raises(ValueError):
            RunConfig(se_joint=True, se_last=True)

    def test_unknown_pretrain_loss(self):
        with pytest.raises(ValueError):
            RunConfig(pretrain_loss="other")

    def test_dict_round_trip(self):
        cfg = tiny_cfg()
        again = RunConfig.from_dict(cfg.as_dict())
        assert again == cfg

    def test_json_round_trip(self, tmp_path):
        cfg = tiny_cfg()
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.as_dict()))
        assert RunConfig.from_json(path) == cfg


class TestIpdResolution:
    def test_explicit_wins(self):
        cfg = RunConfig(ipd_dim=5, dataset_family="faces")
        assert resolve_ipd_dim(cfg, 100) == 5

    def test_family_prior(self):
        assert resolve_ipd_dim(RunConfig(dataset_family="digits"), 100) == 12
        assert resolve_ipd_dim(RunConfig(dataset_family="faces"), 100) == 9

    def test_none_when_unset(self):
        assert resolve_ipd_dim(RunConfig(), 100) is None

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            resolve_ipd_dim(RunConfig(ipd_dim=100), 100)


class TestLoadDataset:
    def test_synth(self):
        ds = load_dataset(tiny_cfg())
        assert ds.n_points == 30
        assert np.allclose(np.linalg.norm(ds.x, axis=0), 1.0)

    def test_csv(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,0\n3,4,1\n")
        ds = load_dataset(RunConfig(csv_path=str(path)))
        assert ds.n_points == 2

    def test_no_source(self):
        with pytest.raises(ValueError):
            load_dataset(RunConfig())


class TestRunPipeline:
    def test_end_to_end_clean_data(self):
        report = run_pipeline(tiny_cfg())
        assert report.metrics is not None
        assert report.metrics["acc"] > 0.9
        assert report.subspace_preserving > 0.9
        assert report.wall_time > 0.0
        assert report.schema_version == 1

    def test_epoch_and_epsilon_logs(self):
        report = run_pipeline(tiny_cfg())
        assert set(report.epochs) >= {"pretrain", "finetune_se", "finetune_q"}
        assert len(report.epsilon_history["finetune_se"]) >= 1

    def test_oracle_mode(self):
        from subclust.selfexpr import OracleWeights

        cfg = tiny_cfg(oracle=OracleWeights(1.0, 0.1))
        report = run_pipeline(cfg)
        assert "oracle" in report.epochs
        assert "finetune_se" not in report.epochs
        assert report.metrics is not None

    def test_stage_error_carries_name(self):
        cfg = tiny_cfg(csv_path="/nonexistent.csv", synth=None)
        with pytest.raises(PipelineError) as info:
            run_pipeline(cfg)
        assert info.value.stage == "load"

    def test_num_clusters_validated(self):
        spec = SyntheticSpec(2, 1, 4, 3, noise_sigma=0.0, seed=0)
        cfg = tiny_cfg(synth=spec, num_clusters=1, ipd_dim=None)
        with pytest.raises(PipelineError) as info:
            run_pipeline(cfg)
        assert info.value.stage == "load"

    def test_deterministic_metrics(self):
        r1 = run_pipeline(tiny_cfg())
        r2 = run_pipeline(tiny_cfg())
        assert r1.metrics == r2.metrics
        assert r1.epsilon_history == r2.epsilon_history


class TestAblation:
    def test_grid_rows_and_names(self):
        reports = run_ablation(
            tiny_cfg(),
            [
                {"se_joint": True, "q_loss": False, "ipd_dim": None},
                {"se_joint": True, "q_loss": True, "ipd_dim": 3},
            ],
        )
        assert len(reports) == 2
        assert reports[0].algorithm == "RE+SE"
        assert reports[1].algorithm == "RE+SE+Q+IPD"
        assert all(r.metrics is not None for r in reports)

    def test_failure_isolated(self):
        reports = run_ablation(
            tiny_cfg(),
            [
                {"ipd_dim": 1000},
                {"ipd_dim": 3},
            ],
        )
        assert reports[0].error is not None
        assert reports[0].failed_stage == "load"
        assert reports[1].metrics is not None


class TestBenchmark:
    def test_baseline_stats(self):
        ds = load_dataset(tiny_cfg(synth=SyntheticSpec(3, 2, 12, 10, noise_sigma=0.0, seed=1)))
        out = run_benchmark(ds, ["ssc"], trials=2, per_cluster=6, admm_lambda=50.0)
        stats = out["algorithms"]["ssc"]
        assert 0.0 <= stats["acc"]["mean"] <= 1.0
        assert stats["acc"]["std"] >= 0.0
        assert out["trials"] == 2

    def test_unknown_algorithm(self):
        ds = load_dataset(tiny_cfg())
        with pytest.raises(ValueError):
            run_benchmark(ds, ["nope"], trials=1, per_cluster=4)

    def test_trials_validated(self):
        ds = load_dataset(tiny_cfg())
        with pytest.raises(ValueError):
            run_benchmark(ds, ["ssc"], trials=0, per_cluster=4)


class TestEmitReport:
    def sample(self):
        return RunReport(
            schema_version=1,
            config={},
            metrics={"acc": 0.975, "nmi": 0.9, "f1": 0.85},
            epsilon_history={},
            epochs={},
            wall_time=1.0,
            algorithm="demo",
        )

    def test_json(self):
        text = emit_report(self.sample(), fmt="json")
        payload = json.loads(text)
        assert payload["metrics"]["acc"] == 0.975

    def test_csv(self):
        text = emit_report(self.sample(), fmt="csv")
        lines = text.strip().splitlines()
        assert lines[0] == "algorithm,acc,nmi,f1,error"
        assert lines[1].startswith("demo,0.975")

    def test_markdown_percentages(self):
        text = emit_report(self.sample(), fmt="markdown")
        assert "| Algorithm | ACC | NMI | F1 |" in text
        assert "| demo | 97.50 | 90.00 | 85.00 |" in text

    def test_markdown_failed_row(self):
        bad = self.sample()
        bad.metrics = None
        bad.error = "boom"
        text = emit_report(bad, fmt="markdown")
        assert "failed: boom" in text

    def test_file_output(self, tmp_path):
        path = tmp_path / "r.json"
        emit_report(self.sample(), fmt="json", path=str(path))
        assert json.loads(path.read_text())["algorithm"] == "demo"

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            emit_report(self.sample(), fmt="xml")


class TestCli:
    def write_cfg(self, tmp_path):
        cfg = tiny_cfg()
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.as_dict()))
        return str(path)

    def test_run_subcommand(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path)
        assert main(["run", "--config", cfg]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["metrics"]["acc"] > 0.9

    def test_run_writes_file(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        out = tmp_path / "report.json"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        assert json.loads(out.read_text())["schema_version"] == 1

    def test_run_markdown(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path)
        assert main(["run", "--config", cfg, "--format", "markdown"]) == 0
        assert "| Algorithm |" in capsys.readouterr().out

    def test_missing_dataset_fails(self, capsys):
        assert main(["run"]) == 1
        assert "error" in capsys.readouterr().err

    def test_baseline_subcommand(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path)
        code = main(["baseline", "ssc", "--config", cfg, "--admm-lambda", "50.0"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["algorithm"] == "ssc"
        assert payload["metrics"]["acc"] > 0.9

    def test_synth_subcommand(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code = main(
            [
                "synth",
                "--clusters",
                "2",
                "--dim",
                "1",
                "--ambient",
                "4",
                "--per-cluster",
                "3",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = out.read_text().strip().splitlines()
        assert len(rows) == 6
        assert len(rows[0].split(",")) == 5

    def test_determinism_byte_identical(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["run", "--config", cfg, "--format", "csv", "--out", str(out1)]) == 0
        assert main(["run", "--config", cfg, "--format", "csv", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_ablate_subcommand(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path)
        assert main(["ablate", "--config", cfg, "--format", "csv"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "algorithm,acc,nmi,f1,error"
        assert len(lines) == 7
