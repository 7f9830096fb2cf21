"""Command-line entry points: run, sweep, analyze, replay, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .analytics import (
    build_metrics_report,
    export_phases_csv,
    export_stats_csv,
    load_events,
    metrics_to_dict,
)
from .config import ConfigError, SimConfig, load_config, set_config_value
from .runner import load_sweep_spec, run_one, run_replay, run_sweep
from .state import ADMIN


def _load(config_path: str | None) -> SimConfig:
    if config_path is None:
        return SimConfig()
    return load_config(config_path)


def _summary(report) -> str:
    phases = report.metrics.phases
    lines = [
        f"seed {report.seed}: ran {report.days_run} day(s), {len(report.events)} events",
        f"commonwealth: {'day ' + str(report.commonwealth_day) + f' (sovereign {report.sovereign})' if report.commonwealth_day is not None else 'not formed'}",
    ]
    for name, rates in (
        ("state of nature", phases.state_of_nature_rates),
        ("commonwealth", phases.commonwealth_rates),
    ):
        if rates is None:
            lines.append(f"{name}: no activity")
        else:
            lines.append(
                f"{name}: rob {rates.rob_rate:.3f}, trade {rates.trade_rate:.3f}, "
                f"farm {rates.farm_rate:.3f}, violence {rates.violence_rate:.3f}"
            )
    if report.aborted:
        lines.append(f"ABORTED (partial log): {report.abort_reason}")
    return "\n".join(lines)


@click.group()
def main() -> None:
    """Agent-society sandbox: farm, rob, trade, concede; watch a commonwealth form."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--max-days", type=int, default=None, help="Override the config day budget.")
@click.option("--provider", type=click.Choice(["heuristic", "llm", "replay"]), default=None)
@click.option("--transcript", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Transcript file (required for --provider replay).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
def run(config_path, seed, max_days, provider, transcript, out_dir) -> None:
    """Run one trial and print a summary."""
    try:
        config = _load(config_path)
        if provider is not None:
            config = set_config_value(config, "provider", provider)
        report = run_one(config, seed=seed, max_days=max_days, out_dir=out_dir, transcript_path=transcript)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    click.echo(_summary(report))
    if out_dir:
        click.echo(f"artifacts in {out_dir}")


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
def sweep(spec_path, config_path, out_dir) -> None:
    """Run a parameter sweep from a YAML spec."""
    try:
        spec = load_sweep_spec(spec_path)
        report = run_sweep(spec, _load(config_path), out_dir=out_dir)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    for point in report.points:
        agg = point.aggregate()
        click.echo(
            f"{json.dumps(agg['params'], sort_keys=True)}: "
            f"{agg['converged_trials']}/{agg['trials']} converged, "
            f"mean day {agg['mean_convergence_day']}"
        )
    if out_dir:
        click.echo(f"artifacts in {out_dir}")


@main.command()
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".")
@click.option("--violence-literal", is_flag=True, default=False,
              help="Use the literal table reading (rejected trades) for the violence rate.")
def analyze(events_path, out_dir, violence_literal) -> None:
    """Compute phase metrics from an events.jsonl log and emit CSVs."""
    events = load_events(events_path)
    commonwealth_day = next(
        (e.payload.get("day") for e in events if e.kind == ADMIN and e.payload.get("admin") == "commonwealth"),
        None,
    )
    metrics = build_metrics_report(events, commonwealth_day, violence_literal=violence_literal)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_phases_csv(metrics.phases, out / "phases.csv")
    export_stats_csv(events, out / "stats.csv")
    (out / "metrics.json").write_text(json.dumps(metrics_to_dict(metrics), indent=2) + "\n", encoding="utf-8")
    click.echo(f"metrics written to {out}")


@main.command()
@click.option("--transcript", "transcript_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--max-days", type=int, default=None)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
def replay(transcript_path, config_path, max_days, out_dir) -> None:
    """Re-run a recorded trial deterministically from its transcript."""
    try:
        config = load_config(config_path) if config_path else None
        report = run_replay(transcript_path, config=config, max_days=max_days, out_dir=out_dir)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    click.echo(_summary(report))


@main.command()
@click.option("--addr", default="127.0.0.1:8000", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--provider", type=click.Choice(["heuristic", "llm", "replay"]), default=None)
def serve(addr, config_path, provider) -> None:
    """Start the live simulation service for the dashboard."""
    from .service import serve as serve_blocking

    try:
        config = _load(config_path)
        if provider is not None:
            config = set_config_value(config, "provider", provider)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    serve_blocking(config, addr=addr)


if __name__ == "__main__":
    sys.exit(main())
