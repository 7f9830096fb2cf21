"""Trial execution with artifacts on disk, plus multi-trial parameter sweeps.

Per-trial output directory layout:
    events.jsonl      every event, one JSON object per line
    stats.csv         per-event activity table
    phases.csv        summary-table rows per phase
    transcript.jsonl  LLM requests/responses (llm provider only)
    report.json       seed, config snapshot, metrics, day snapshots
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .analytics import export_events, export_phases_csv, export_stats_csv, metrics_to_dict
from .config import ConfigError, SimConfig, config_to_dict, set_config_value
from .llm import LlmClient, ReplayTransport, TranscriptWriter, build_http_transport, read_transcript
from .loop import TrialReport, run_trial
from .providers import DecisionService, build_decision_service


def _resolve_api_key(config: SimConfig) -> str | None:
    return os.environ.get(config.llm.api_key_env)


def build_service_for_run(
    config: SimConfig,
    out_dir: Path | None = None,
    transcript_path: str | Path | None = None,
    transport=None,
) -> DecisionService:
    """Wire providers for one run; llm runs record a transcript when out_dir is set."""
    kinds = {config.provider, *config.provider_per_agent.values()}
    client = None
    replay_client = None
    if "llm" in kinds:
        if transport is None:
            transport = build_http_transport(config.llm, _resolve_api_key(config))
        recorder = None
        if out_dir is not None:
            recorder = TranscriptWriter(
                Path(out_dir) / "transcript.jsonl",
                header={"seed": config.seed, "config": config_to_dict(config)},
            )
        client = LlmClient(
            transport,
            recorder=recorder,
            max_attempts=config.llm.max_attempts,
            backoff_s=config.llm.backoff_s,
        )
    if "replay" in kinds:
        if transcript_path is None:
            raise ConfigError("replay provider requires a transcript path")
        replay_client = LlmClient(ReplayTransport.from_file(transcript_path), max_attempts=1, backoff_s=0.0)
    return build_decision_service(config, client=client, replay_client=replay_client)


def trial_report_to_dict(config: SimConfig, report: TrialReport) -> dict[str, Any]:
    return {
        "seed": report.seed,
        "days_run": report.days_run,
        "commonwealth_day": report.commonwealth_day,
        "sovereign": report.sovereign,
        "fallbacks": report.fallbacks,
        "aborted": report.aborted,
        "abort_reason": report.abort_reason,
        "event_count": len(report.events),
        "config": config_to_dict(config),
        "metrics": metrics_to_dict(report.metrics),
        "day_snapshots": report.day_snapshots,
    }


def write_trial_artifacts(config: SimConfig, report: TrialReport, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_events(report.events, out / "events.jsonl")
    export_stats_csv(report.events, out / "stats.csv")
    export_phases_csv(report.metrics.phases, out / "phases.csv")
    (out / "report.json").write_text(
        json.dumps(trial_report_to_dict(config, report), indent=2) + "\n", encoding="utf-8"
    )
    return out


def run_one(
    config: SimConfig,
    seed: int | None = None,
    max_days: int | None = None,
    out_dir: str | Path | None = None,
    transcript_path: str | Path | None = None,
    transport=None,
) -> TrialReport:
    """Run a single trial, writing artifacts when an output directory is given.

    Seed and day-budget overrides are folded into the recorded config so the
    transcript header and report.json describe the run as it actually was.
    """
    run_config = config
    if seed is not None:
        run_config = set_config_value(run_config, "seed", seed)
    if max_days is not None:
        run_config = set_config_value(run_config, "max_days", max_days)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    decisions = build_service_for_run(run_config, out_dir=out, transcript_path=transcript_path, transport=transport)
    report = run_trial(run_config, decisions, seed=run_config.seed)
    if out is not None:
        write_trial_artifacts(run_config, report, out)
    return report


def run_replay(
    transcript_path: str | Path,
    config: SimConfig | None = None,
    max_days: int | None = None,
    out_dir: str | Path | None = None,
) -> TrialReport:
    """Re-run a recorded trial from its transcript; no network calls happen.

    The transcript header carries the recorded seed and config; an explicit
    ``config`` overrides it (and will drift-error if it actually differs).
    """
    header, _ = read_transcript(transcript_path)
    if config is None:
        if header is None or "config" not in header:
            raise ConfigError(
                f"{transcript_path} has no config header; pass a config explicitly"
            )
        from .config import config_from_dict

        config = config_from_dict(header["config"])
        if "seed" in header:
            config = set_config_value(config, "seed", header["seed"])
    replay_config = set_config_value(config, "provider", "replay")
    decisions = build_service_for_run(replay_config, transcript_path=transcript_path)
    report = run_trial(replay_config, decisions, seed=replay_config.seed, max_days=max_days)
    if out_dir is not None:
        write_trial_artifacts(replay_config, report, out_dir)
    return report


# -- sweeps --------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """Cross product of parameter values, several trials per point."""

    parameters: tuple[tuple[str, tuple[Any, ...]], ...] = ()
    trials_per_point: int = 3
    base_seed: int = 0
    max_points: int = 256

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepSpec":
        known = {"parameters", "trials_per_point", "base_seed", "max_points"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown sweep key(s): {', '.join(sorted(unknown))}")
        raw = data.get("parameters", {})
        if isinstance(raw, dict):
            parameters = tuple((str(k), tuple(v)) for k, v in raw.items())
        else:
            parameters = tuple((str(k), tuple(v)) for k, v in raw)
        return cls(
            parameters=parameters,
            trials_per_point=int(data.get("trials_per_point", 3)),
            base_seed=int(data.get("base_seed", 0)),
            max_points=int(data.get("max_points", 256)),
        )

    def points(self) -> list[dict[str, Any]]:
        combos: list[dict[str, Any]] = [{}]
        for path, values in self.parameters:
            combos = [{**combo, path: value} for combo in combos for value in values]
        if len(combos) > self.max_points:
            raise ConfigError(f"sweep has {len(combos)} points, above the cap of {self.max_points}")
        return combos


@dataclass
class SweepPointResult:
    params: dict[str, Any]
    trials: list[dict[str, Any]] = field(default_factory=list)

    def aggregate(self) -> dict[str, Any]:
        """Per-trial mean rates per phase plus pooled-count rates, both labeled.

        The two aggregations answer different questions (mean of ratios vs
        ratio of sums) and are deliberately never mixed.
        """
        from .analytics import Counts, compute_rates, rates_to_dict

        out: dict[str, Any] = {
            "params": self.params,
            "trials": len(self.trials),
            "convergence_days": [t["commonwealth_day"] for t in self.trials],
        }
        converged = [d for d in out["convergence_days"] if d is not None]
        out["converged_trials"] = len(converged)
        out["mean_convergence_day"] = sum(converged) / len(converged) if converged else None
        for phase in ("state_of_nature", "commonwealth"):
            per_trial = [t["metrics"][phase]["rates"] for t in self.trials if t["metrics"][phase]["rates"]]
            if per_trial:
                keys = per_trial[0].keys()
                out[f"{phase}_mean_rates"] = {k: sum(r[k] for r in per_trial) / len(per_trial) for k in keys}
            else:
                out[f"{phase}_mean_rates"] = None
            pooled = Counts()
            for t in self.trials:
                c = t["metrics"][phase]["counts"]
                pooled = pooled + Counts(
                    robbery=c["robbery"],
                    resisted_robbery=c["resisted_robbery"],
                    trade=c["trade"],
                    accepted_trade=c["accepted_trade"],
                    rejected_trade=c["rejected_trade"],
                    farm=c["farm"],
                    donation=c["donation"],
                    concession=c["concession"],
                )
            out[f"{phase}_pooled_rates"] = rates_to_dict(compute_rates(pooled))
        return out


@dataclass
class SweepReport:
    points: list[SweepPointResult]

    def to_dict(self) -> dict[str, Any]:
        return {"points": [p.aggregate() for p in self.points]}


def run_sweep(spec: SweepSpec, base_config: SimConfig, out_dir: str | Path | None = None) -> SweepReport:
    """Run the sweep grid; trial aborts are recorded and the sweep continues.

    Trial seeds derive as base_seed + trial index, identical across points so
    points are comparable run for run.
    """
    report = SweepReport(points=[])
    out = Path(out_dir) if out_dir is not None else None
    for point_index, params in enumerate(spec.points()):
        config = base_config
        for path, value in params.items():
            config = set_config_value(config, path, value)
        point = SweepPointResult(params=params)
        for trial_index in range(spec.trials_per_point):
            seed = spec.base_seed + trial_index
            trial_dir = out / f"point_{point_index:03d}" / f"trial_{trial_index}" if out else None
            try:
                trial = run_one(config, seed=seed, out_dir=trial_dir)
            except Exception as exc:  # a dead trial must not kill the sweep
                point.trials.append(
                    {
                        "seed": seed,
                        "commonwealth_day": None,
                        "aborted": True,
                        "abort_reason": str(exc),
                        "metrics": {
                            "state_of_nature": {"counts": _zero_counts(), "rates": None},
                            "commonwealth": {"counts": _zero_counts(), "rates": None},
                        },
                    }
                )
                continue
            entry = trial_report_to_dict(config, trial)
            entry.pop("day_snapshots", None)
            entry.pop("config", None)
            point.trials.append(entry)
        report.points.append(point)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep_report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        _write_sweep_csv(report, out / "sweep_summary.csv")
    return report


def _zero_counts() -> dict[str, int]:
    from .analytics import Counts, counts_to_dict

    return counts_to_dict(Counts())


def _write_sweep_csv(report: SweepReport, path: Path) -> None:
    rows = [p.aggregate() for p in report.points]
    rate_keys = ["rob_rate", "violence_rate", "trade_rate", "accepted_trade_rate", "farm_rate"]
    header = ["params", "trials", "converged_trials", "mean_convergence_day"]
    for phase in ("state_of_nature", "commonwealth"):
        header += [f"{phase}_mean_{k}" for k in rate_keys]
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            cells: list[Any] = [
                json.dumps(row["params"], sort_keys=True),
                row["trials"],
                row["converged_trials"],
                row["mean_convergence_day"] if row["mean_convergence_day"] is not None else "",
            ]
            for phase in ("state_of_nature", "commonwealth"):
                rates = row[f"{phase}_mean_rates"]
                cells += [rates[k] if rates else "" for k in rate_keys]
            writer.writerow(cells)


def load_sweep_spec(path: str | Path) -> SweepSpec:
    import yaml

    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: sweep spec must be a mapping")
    return SweepSpec.from_dict(data)
