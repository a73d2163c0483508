import json
from pathlib import Path

import numpy as np
import pytest

from frustra.cli import main
from frustra.errors import ConfigError
from frustra.pipeline import PipelineConfig, run_pipeline


@pytest.fixture(scope="module")
def synth_events(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthdata")
    events = root / "events.csv"
    manifest = root / "manifest.csv"
    code = main(["--seed", "5", "synth", "--n", "900", "--out", str(events),
                 "--manifest", str(manifest)])
    assert code == 0
    return events, manifest


def pipeline_config_text(events: Path, out_dir: Path, family: str = "gbdt",
                         extra: str = "") -> str:
    return (f"seed = 11\nthreads = 1\nevents = {events}\nout_dir = {out_dir}\n"
            f"model.family = {family}\n{extra}")


class TestStageCommands:
    def test_ingest_stats(self, synth_events, tmp_path, capsys):
        events, _ = synth_events
        stats_path = tmp_path / "stats.json"
        out_path = tmp_path / "normalized.csv"
        code = main(["ingest", "--input", str(events), "--stats-out", str(stats_path),
                     "--out", str(out_path)])
        assert code == 0
        stats = json.loads(stats_path.read_text())
        assert stats["parse"]["rows_read"] == stats["parse"]["rows_accepted"]
        assert stats["corpus"]["distinct_sessions"] == 900
        assert "rows read" in capsys.readouterr().out

    def test_full_stage_chain(self, synth_events, tmp_path):
        events, _ = synth_events
        sessions = tmp_path / "sessions.csv"
        labeled = tmp_path / "labeled.csv"
        features = tmp_path / "features.csv"
        splits = tmp_path / "splits"
        params = tmp_path / "yj.csv"
        train_t = tmp_path / "train_t.csv"
        val_t = tmp_path / "val_t.csv"
        test_t = tmp_path / "test_t.csv"
        model = tmp_path / "model.json"
        report = tmp_path / "report.txt"

        assert main(["sessionize", "--input", str(events), "--out", str(sessions)]) == 0
        assert main(["label", "--input", str(sessions), "--out", str(labeled)]) == 0
        assert main(["featurize", "--input", str(labeled), "--out", str(features)]) == 0
        assert main(["--seed", "3", "split", "--in", str(features),
                     "--out-dir", str(splits)]) == 0
        assert main(["transform", "fit", "--in", str(splits / "train.csv"),
                     "--out", str(params)]) == 0
        for src, dst in (("train", train_t), ("val", val_t), ("test", test_t)):
            assert main(["transform", "apply", "--in", str(splits / f"{src}.csv"),
                         "--params", str(params), "--out", str(dst)]) == 0
        assert main(["--seed", "3", "train", "--model", "gbdt", "--train", str(train_t),
                     "--val", str(val_t), "--out", str(model)]) == 0
        assert main(["eval", "--model", str(model), "--data", str(test_t),
                     "--report", str(report)]) == 0
        assert report.exists()
        assert Path(str(report) + ".csv").exists()
        assert (Path(str(model) + ".train_curve.csv")).exists()

    def test_lstm_train_eval_and_early_window(self, synth_events, tmp_path):
        events, _ = synth_events
        sessions = tmp_path / "sessions.csv"
        labeled = tmp_path / "labeled.csv"
        model = tmp_path / "lstm.json"
        sweep = tmp_path / "early.csv"
        config = tmp_path / "lstm.cfg"
        config.write_text("embed_dim = 4\nhidden_dim = 8\nmax_epochs = 2\nbatch_size = 128\n")

        main(["sessionize", "--input", str(events), "--out", str(sessions)])
        main(["label", "--input", str(sessions), "--out", str(labeled)])
        assert main(["--seed", "2", "train", "--model", "lstm", "--train", str(labeled),
                     "--model-config", str(config), "--out", str(model)]) == 0
        assert main(["eval", "--model", str(model), "--data", str(labeled),
                     "--report", str(tmp_path / "r.txt")]) == 0
        assert main(["early-window", "--model", str(model), "--data", str(labeled),
                     "--windows", "2,5", "--out", str(sweep)]) == 0
        lines = sweep.read_text().splitlines()
        assert len(lines) == 4  # meta + header + two windows

    def test_early_window_refuses_tabular_artifact(self, synth_events, tmp_path):
        events, _ = synth_events
        sessions = tmp_path / "s.csv"
        labeled = tmp_path / "l.csv"
        features = tmp_path / "f.csv"
        model = tmp_path / "m.json"
        main(["sessionize", "--input", str(events), "--out", str(sessions)])
        main(["label", "--input", str(sessions), "--out", str(labeled)])
        main(["featurize", "--input", str(labeled), "--out", str(features)])
        main(["train", "--model", "logreg", "--train", str(features), "--out", str(model)])
        code = main(["early-window", "--model", str(model), "--data", str(labeled),
                     "--out", str(tmp_path / "x.csv")])
        assert code == 3


class TestExitCodes:
    def test_missing_input_is_data_or_io_error(self, tmp_path):
        code = main(["sessionize", "--input", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "out.csv")])
        assert code == 3

    def test_bad_rules_file_is_config_error(self, synth_events, tmp_path):
        events, _ = synth_events
        sessions = tmp_path / "sessions.csv"
        main(["sessionize", "--input", str(events), "--out", str(sessions)])
        rules = tmp_path / "rules.cfg"
        rules.write_text("nope = 3\n")
        code = main(["label", "--input", str(sessions), "--rules", str(rules),
                     "--out", str(tmp_path / "l.csv")])
        assert code == 2

    def test_degenerate_training_is_training_error(self, tmp_path):
        # one-class matrix: training must fail with exit code 4
        from frustra.features import FEATURE_NAMES, FeatureMatrix, write_matrix

        matrix = FeatureMatrix(
            session_ids=[f"s{i}" for i in range(30)],
            labels=np.zeros(30, dtype=np.int64),
            X=np.random.default_rng(0).uniform(size=(30, len(FEATURE_NAMES))),
        )
        path = tmp_path / "m.csv"
        write_matrix(matrix, path)
        code = main(["train", "--model", "logreg", "--train", str(path),
                     "--out", str(tmp_path / "model.json")])
        assert code in (3, 4)

    def test_feature_tag_mismatch_refused(self, synth_events, tmp_path):
        events, _ = synth_events
        sessions = tmp_path / "s.csv"
        labeled = tmp_path / "l.csv"
        features = tmp_path / "f.csv"
        model = tmp_path / "m.json"
        main(["sessionize", "--input", str(events), "--out", str(sessions)])
        main(["label", "--input", str(sessions), "--out", str(labeled)])
        main(["featurize", "--input", str(labeled), "--out", str(features)])
        main(["train", "--model", "logreg", "--train", str(features), "--out", str(model)])

        # re-order two feature columns in the header only
        lines = features.read_text().splitlines()
        header = lines[1].split(",")
        header[2], header[3] = header[3], header[2]
        (tmp_path / "reordered.csv").write_text(
            "\n".join([lines[0], ",".join(header)] + lines[2:]) + "\n")
        code = main(["eval", "--model", str(model), "--data",
                     str(tmp_path / "reordered.csv"), "--report", str(tmp_path / "r.txt")])
        assert code == 3


class TestRunPipeline:
    def test_gbdt_end_to_end(self, synth_events, tmp_path):
        events, _ = synth_events
        config = tmp_path / "pipeline.cfg"
        config.write_text(pipeline_config_text(
            events, tmp_path / "out", extra="model.rounds = 15\nmodel.max_depth = 3\n"))
        assert main(["run", "--config", str(config)]) == 0
        out = tmp_path / "out"
        for name in ("events.csv", "sessions.csv", "labeled.csv", "features.csv",
                     "yj_params.csv", "model.json", "report.txt"):
            assert (out / name).exists(), name
        assert (out / "splits" / "train.csv").exists()
        assert (out / "transformed" / "test.csv").exists()

    def test_rerun_is_byte_identical(self, synth_events, tmp_path):
        events, _ = synth_events
        out = tmp_path / "out"
        config = PipelineConfig.from_mapping({
            "seed": "11", "threads": "1", "events": str(events),
            "out_dir": str(out), "model.family": "gbdt",
            "model.rounds": "10", "model.max_depth": "3",
        })
        run_pipeline(config)
        first = {p.relative_to(out): p.read_bytes()
                 for p in out.rglob("*") if p.is_file()}
        run_pipeline(config)
        second = {p.relative_to(out): p.read_bytes()
                  for p in out.rglob("*") if p.is_file()}
        assert first.keys() == second.keys()
        for rel in first:
            assert first[rel] == second[rel], rel

    def test_missing_events_fails_before_any_work(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineConfig.from_mapping({
                "seed": "1", "events": str(tmp_path / "absent.csv"),
                "out_dir": str(tmp_path / "out"),
            })
        assert not (tmp_path / "out").exists()

    def test_unknown_config_key_rejected(self, synth_events, tmp_path):
        events, _ = synth_events
        with pytest.raises(ConfigError):
            PipelineConfig.from_mapping({
                "seed": "1", "events": str(events), "out_dir": str(tmp_path),
                "bogus": "1",
            })

    def test_run_without_config_is_config_error(self):
        assert main(["run"]) == 2


class TestPartialMarker:
    def test_failed_write_leaves_partial_file(self, tmp_path):
        from frustra.fileio import open_for_write

        target = tmp_path / "out.csv"
        with pytest.raises(RuntimeError):
            with open_for_write(target) as handle:
                handle.write("half a row")
                raise RuntimeError("boom")
        assert not target.exists()
        assert (tmp_path / "out.csv.partial").exists()
