"""CLI subcommands: run, sweep, analyze, replay (serve is covered in service tests)."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from polis.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def test_run_deterministic_summary(runner, tmp_path):
    args = ["run", "--provider", "heuristic", "--seed", "7", "--max-days", "10", "--out-dir", str(tmp_path / "o")]
    first = runner.invoke(main, args)
    assert first.exit_code == 0, first.output
    assert "seed 7" in first.output
    second = runner.invoke(main, ["run", "--provider", "heuristic", "--seed", "7", "--max-days", "10"])
    assert second.output.splitlines()[0] == first.output.splitlines()[0]
    assert (tmp_path / "o" / "events.jsonl").exists()


def test_run_with_config_file(runner, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("population: 5\nseed: 1\nmax_days: 3\n")
    result = runner.invoke(main, ["run", "--config", str(cfg)])
    assert result.exit_code == 0, result.output
    assert "ran 3 day(s)" in result.output


def test_run_bad_config_is_usage_error(runner, tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("population: 1\n")
    result = runner.invoke(main, ["run", "--config", str(cfg)])
    assert result.exit_code != 0
    assert "population" in result.output


def test_analyze_emits_phase_summary(runner, tmp_path):
    out = tmp_path / "run"
    assert runner.invoke(main, ["run", "--seed", "2", "--max-days", "20", "--out-dir", str(out)]).exit_code == 0
    analysis = tmp_path / "analysis"
    result = runner.invoke(main, ["analyze", "--events", str(out / "events.jsonl"), "--out-dir", str(analysis)])
    assert result.exit_code == 0, result.output
    assert (analysis / "phases.csv").exists()
    metrics = json.loads((analysis / "metrics.json").read_text())
    # analyze recovers the commonwealth day from the milestone event
    report = json.loads((out / "report.json").read_text())
    assert metrics["commonwealth_day"] == report["commonwealth_day"]


def test_sweep_command(runner, tmp_path):
    spec = tmp_path / "sweep.yaml"
    spec.write_text("parameters:\n  memory_depth: [30, 10]\ntrials_per_point: 1\n")
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("population: 5\nmax_days: 3\n")
    result = runner.invoke(main, ["sweep", "--spec", str(spec), "--config", str(cfg), "--out-dir", str(tmp_path / "s")])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "s" / "sweep_summary.csv").exists()
    assert result.output.count("converged") == 2


def test_replay_command_reproduces_run(runner, tmp_path):
    from conftest import SyntheticLlm
    from polis.runner import run_one

    from conftest import make_config

    out = tmp_path / "rec"
    run_one(make_config(population=5, provider="llm", seed=3), max_days=5, out_dir=out, transport=SyntheticLlm(5))
    result = runner.invoke(main, ["replay", "--transcript", str(out / "transcript.jsonl"), "--out-dir", str(tmp_path / "rep")])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "rep" / "events.jsonl").read_bytes() == (out / "events.jsonl").read_bytes()


def test_missing_required_flag_is_usage_error(runner):
    result = runner.invoke(main, ["analyze"])
    assert result.exit_code != 0
    assert "Missing option" in result.output
