import json

import numpy as np
import pytest

from laneweave.cli import (
    EXIT_ARGUMENT,
    EXIT_CALIBRATION,
    EXIT_OK,
    EXIT_SCHEMA,
    RunConfig,
    bench_generation,
    main,
    read_drive_log_csv,
    resolve_config,
)
from laneweave.errors import SchemaError
from laneweave.generator import load_model


@pytest.fixture
def tour_csv(tmp_path):
    path = tmp_path / "tour.csv"
    code = main(
        ["synth", "--minutes", "10", "--seed", "6", "--out", str(path)]
    )
    assert code == EXIT_OK
    return path


@pytest.fixture
def model_file(tmp_path, tour_csv):
    path = tmp_path / "model.json"
    code = main(["calibrate", "--input", str(tour_csv), "--out", str(path)])
    assert code == EXIT_OK
    return path


class TestSynth:
    def test_writes_tour_and_model(self, tmp_path):
        csv_path = tmp_path / "t.csv"
        model_path = tmp_path / "m.json"
        code = main(
            [
                "synth",
                "--family",
                "banded",
                "--p",
                "0.9",
                "--minutes",
                "5",
                "--seed",
                "1",
                "--out",
                str(csv_path),
                "--model-out",
                str(model_path),
            ]
        )
        assert code == EXIT_OK
        log = read_drive_log_csv(csv_path)
        assert len(log) == 5 * 60 * 5
        model = load_model(model_path)
        assert model.metadata["family"] == "banded"

    def test_same_seed_byte_identical(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for path in (a, b):
            assert main(["synth", "--minutes", "2", "--seed", "3", "--out", str(path)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestCalibrate:
    def test_produces_loadable_model(self, model_file):
        model = load_model(model_file)
        sums = model.coarse.transition.sum(axis=1)
        assert np.all(np.abs(sums - 1.0) <= 1e-9)
        assert model.metadata["config"]["n_c"] == 20
        assert "created_at" in model.metadata

    def test_header_only_csv_is_insufficient_data(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("t,dist_left,dist_right,v_lon\n")
        code = main(["calibrate", "--input", str(path), "--out", str(tmp_path / "m.json")])
        assert code == EXIT_CALIBRATION

    def test_bad_header_is_schema_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,left,right,speed\n0,1,1,80\n")
        code = main(["calibrate", "--input", str(path), "--out", str(tmp_path / "m.json")])
        assert code == EXIT_SCHEMA

    def test_unparseable_cell_is_schema_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,dist_left,dist_right,v_lon\n0.0,abc,1.8,80\n")
        with pytest.raises(SchemaError, match="dist_left"):
            read_drive_log_csv(path)
        assert main(["calibrate", "--input", str(path), "--out", str(tmp_path / "m.json")]) == EXIT_SCHEMA

    def test_non_monotone_timestamps_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,dist_left,dist_right,v_lon\n0.0,1.8,1.8,80\n0.0,1.8,1.8,80\n")
        with pytest.raises(SchemaError, match="row 2"):
            read_drive_log_csv(path)

    def test_negative_distance_row_survives_calibration(self, tmp_path, tour_csv):
        lines = tour_csv.read_text().splitlines()
        cells = lines[1].split(",")
        cells[1] = "-1.0"
        lines[1] = ",".join(cells)
        patched = tmp_path / "patched.csv"
        patched.write_text("\n".join(lines) + "\n")
        code = main(["calibrate", "--input", str(patched), "--out", str(tmp_path / "m.json")])
        assert code == EXIT_OK


class TestGenerate:
    def test_row_counts(self, tmp_path, model_file):
        for duration, rows in ((10.0, 50), (3600.0, 18000)):
            out = tmp_path / f"profile_{int(duration)}.csv"
            code = main(
                [
                    "generate",
                    "--model",
                    str(model_file),
                    "--x0",
                    "0.0",
                    "--duration",
                    str(duration),
                    "--seed",
                    "1",
                    "--out",
                    str(out),
                ]
            )
            assert code == EXIT_OK
            lines = out.read_text().strip().splitlines()
            assert lines[0] == "t,x"
            assert len(lines) == rows + 1

    def test_same_seed_byte_identical(self, tmp_path, model_file):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for out in (a, b):
            args = [
                "generate",
                "--model",
                str(model_file),
                "--x0",
                "0.1",
                "--duration",
                "60",
                "--seed",
                "9",
                "--out",
                str(out),
            ]
            assert main(args) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_out_of_range_x0_is_argument_error(self, tmp_path, model_file):
        code = main(
            [
                "generate",
                "--model",
                str(model_file),
                "--x0",
                "0.7",
                "--duration",
                "10",
                "--out",
                str(tmp_path / "p.csv"),
            ]
        )
        assert code == EXIT_ARGUMENT

    def test_missing_model_is_schema_error(self, tmp_path):
        code = main(
            [
                "generate",
                "--model",
                str(tmp_path / "missing.json"),
                "--x0",
                "0.0",
                "--duration",
                "10",
                "--out",
                str(tmp_path / "p.csv"),
            ]
        )
        assert code == EXIT_SCHEMA


class TestEvaluate:
    def test_writes_reports_for_requested_modes(self, tmp_path, model_file, tour_csv):
        out_dir = tmp_path / "reports"
        code = main(
            [
                "evaluate",
                "--model",
                str(model_file),
                "--input",
                str(tour_csv),
                "--modes",
                "shift,full",
                "--seed",
                "2",
                "--out",
                str(out_dir),
            ]
        )
        assert code == EXIT_OK
        assert (out_dir / "report_shift.json").exists()
        assert (out_dir / "summary_shift.csv").exists()
        assert (out_dir / "report_full.json").exists()
        document = json.loads((out_dir / "report_full.json").read_text())
        assert document["mode"] == "full"
        assert document["config"]["n_c"] == 20
        assert len(document["metrics"]) == 10
        summary = (out_dir / "summary_full.csv").read_text().strip().splitlines()
        assert len(summary) == 21

    def test_unknown_mode_is_argument_error(self, tmp_path, model_file, tour_csv):
        code = main(
            [
                "evaluate",
                "--model",
                str(model_file),
                "--input",
                str(tour_csv),
                "--modes",
                "sideways",
                "--out",
                str(tmp_path / "r"),
            ]
        )
        assert code == EXIT_ARGUMENT


class TestBench:
    def test_reports_all_backends(self, capsys, model_file):
        code = main(["bench", "--model", str(model_file), "--steps", "2000", "--reps", "2"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "backend=numpy" in out
        assert "speedup" in out

    def test_bench_rows_have_timings(self, model_file):
        rows = bench_generation(load_model(model_file), 2000, 2)
        for row in rows:
            assert row["full_s"] > 0.0
            assert row["coarse_s"] > 0.0
            assert row["noise_s"] > 0.0
            assert "saving_s" in row


class TestConfigResolution:
    def test_file_then_flag_precedence(self, tmp_path):
        config_file = tmp_path / "config.json"
        config_file.write_text(json.dumps({"n_c": 10, "jump_threshold": 0.3}))

        class Args:
            config = str(config_file)
            n_c = 8

        config = resolve_config(Args())
        assert config.n_c == 8  # flag beats file
        assert config.jump_threshold == 0.3  # file beats default
        assert config.dt == 0.2  # default survives

    def test_env_var_supplies_config(self, tmp_path, monkeypatch):
        config_file = tmp_path / "config.json"
        config_file.write_text(json.dumps({"v_min": 50.0}))
        monkeypatch.setenv("LANEWEAVE_CONFIG", str(config_file))

        class Args:
            config = None

        assert resolve_config(Args()).v_min == 50.0

    def test_unknown_key_rejected(self, tmp_path):
        config_file = tmp_path / "config.json"
        config_file.write_text(json.dumps({"nc": 10}))

        class Args:
            config = str(config_file)

        with pytest.raises(SchemaError, match="nc"):
            resolve_config(Args())

    def test_defaults_match_model_params(self):
        config = RunConfig()
        params = config.model_params()
        assert params.n_c == 20
        assert params.cap_threshold == 0.03
        assert params.v_min == 40.0
