"""Command-line interface: flags, formats, exit codes."""

import json
import stat

import streamq.bench
from streamq.bench import rows_from_csv
from streamq.cli import EXIT_CONFIG, EXIT_OK, EXIT_ORACLE, EXIT_PROBE, main
from streamq.pipeline import RunMetrics


def test_micro_csv_to_file(tmp_path):
    out = tmp_path / "report.csv"
    code = main([
        "--mode", "micro", "--kind", "lamport", "--capacity", "32",
        "--tuples", "500", "--reps", "2", "--out", str(out),
    ])
    assert code == EXIT_OK
    rows = rows_from_csv(out.read_text())
    assert len(rows) == 3
    assert {r.kind for r in rows} == {"lamport"}


def test_micro_stdout_default_kinds(capsys):
    code = main(["--mode", "micro", "--capacity", "16", "--tuples", "200", "--reps", "1"])
    assert code == EXIT_OK
    rows = rows_from_csv(capsys.readouterr().out)
    assert {r.kind for r in rows} == {
        "lamport", "fastforward", "batchqueue", "mcringbuffer"
    }


def test_pipeline_json(tmp_path):
    out = tmp_path / "report.json"
    code = main([
        "--mode", "pipeline", "--kind", "mcr", "--capacity", "64",
        "--tuples", "1000", "--reps", "1", "--producers", "1",
        "--aggregators", "3", "--format", "json", "--out", str(out),
    ])
    assert code == EXIT_OK
    data = json.loads(out.read_text())
    assert data[0]["kind"] == "mcringbuffer"
    assert data[0]["aggregators"] == 3


def test_kind_aliases_accepted(tmp_path):
    out = tmp_path / "r.csv"
    code = main([
        "--mode", "micro", "--kind", "bq", "--kind", "ff",
        "--capacity", "16", "--tuples", "100", "--reps", "1",
        "--out", str(out),
    ])
    assert code == EXIT_OK
    kinds = {r.kind for r in rows_from_csv(out.read_text())}
    assert kinds == {"batchqueue", "fastforward"}


class TestExitCodes:
    def test_unknown_kind_is_config_error(self, capsys):
        code = main(["--mode", "micro", "--kind", "nope", "--tuples", "10"])
        assert code == EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_bad_window_is_config_error(self, capsys):
        code = main([
            "--mode", "pipeline", "--window-size", "2", "--window-advance", "5",
            "--tuples", "10",
        ])
        assert code == EXIT_CONFIG

    def test_odd_batchqueue_capacity_is_config_error(self, capsys):
        code = main([
            "--mode", "micro", "--kind", "bq", "--capacity", "33",
            "--tuples", "10", "--reps", "1",
        ])
        assert code == EXIT_CONFIG

    def test_wrong_pipeline_output_is_oracle_mismatch(self, monkeypatch, capsys):
        def broken_pipeline(config):
            return {999: 1}, RunMetrics(elapsed_s=0.001, tuples=50, partials=0)

        monkeypatch.setattr(streamq.bench, "run_pipeline", broken_pipeline)
        code = main([
            "--mode", "pipeline", "--kind", "lamport", "--capacity", "64",
            "--tuples", "50", "--reps", "1", "--aggregators", "2",
        ])
        assert code == EXIT_ORACLE
        assert "oracle mismatch" in capsys.readouterr().err

    def test_strict_energy_probe_failure(self, tmp_path, capsys):
        probe = tmp_path / "probe.sh"
        probe.write_text("#!/bin/sh\nexit 9\n")
        probe.chmod(probe.stat().st_mode | stat.S_IEXEC)
        code = main([
            "--mode", "micro", "--kind", "lamport", "--capacity", "16",
            "--tuples", "50", "--reps", "1",
            "--energy-cmd", str(probe), "--strict-energy",
        ])
        assert code == EXIT_PROBE

    def test_lenient_energy_probe_failure_still_reports(self, tmp_path, capsys):
        probe = tmp_path / "probe.sh"
        probe.write_text("#!/bin/sh\nexit 9\n")
        probe.chmod(probe.stat().st_mode | stat.S_IEXEC)
        code = main([
            "--mode", "micro", "--kind", "lamport", "--capacity", "16",
            "--tuples", "50", "--reps", "1", "--energy-cmd", str(probe),
        ])
        assert code == EXIT_OK
        rows = rows_from_csv(capsys.readouterr().out)
        assert all(r.joules is None for r in rows)


def test_verify_off_still_runs(tmp_path):
    out = tmp_path / "r.csv"
    code = main([
        "--mode", "pipeline", "--kind", "lamport", "--capacity", "64",
        "--tuples", "500", "--reps", "1", "--aggregators", "2",
        "--verify", "off", "--out", str(out),
    ])
    assert code == EXIT_OK
