"""Activity metrics: counts, rates, phase comparisons, rob intervals, t-test, CSV.

Count and rate definitions follow the summary-table convention: activity is
robbery + trade + farm, every rate divides by activity, and the violence
rate is resisted robbery over activity. (The literal table wording divides
"resisted trade" by activity; that reading is almost certainly a typo but
stays available behind ``violence_literal=True`` rather than vanishing.)
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .state import (
    ADMIN,
    CONCEDE,
    CONSUME,
    DONATE,
    FARM,
    RESP_ACCEPT,
    RESP_CONCEDE,
    RESP_REJECT,
    RESP_RESIST,
    ROB,
    TRADE,
    Event,
    Outcome,
    Qty,
)


@dataclass(frozen=True, slots=True)
class Counts:
    robbery: int = 0
    resisted_robbery: int = 0
    trade: int = 0
    accepted_trade: int = 0
    rejected_trade: int = 0
    farm: int = 0
    donation: int = 0
    concession: int = 0

    @property
    def activity(self) -> int:
        return self.robbery + self.trade + self.farm

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(
            robbery=self.robbery + other.robbery,
            resisted_robbery=self.resisted_robbery + other.resisted_robbery,
            trade=self.trade + other.trade,
            accepted_trade=self.accepted_trade + other.accepted_trade,
            rejected_trade=self.rejected_trade + other.rejected_trade,
            farm=self.farm + other.farm,
            donation=self.donation + other.donation,
            concession=self.concession + other.concession,
        )


@dataclass(frozen=True, slots=True)
class Rates:
    rob_rate: float
    violence_rate: float
    trade_rate: float
    accepted_trade_rate: float
    farm_rate: float


@dataclass(frozen=True, slots=True)
class TTestResult:
    t: float
    df: int
    p_two_sided: float


@dataclass(frozen=True, slots=True)
class PhaseReport:
    """Counts and rates split at commonwealth formation day."""

    state_of_nature: Counts
    state_of_nature_rates: Rates | None
    commonwealth: Counts
    commonwealth_rates: Rates | None
    commonwealth_day: int | None


@dataclass(frozen=True, slots=True)
class MetricsReport:
    phases: PhaseReport
    resisted_gaps: tuple[int, ...]
    conceded_gaps: tuple[int, ...]
    interval_test: TTestResult | None


def compute_counts(events: Iterable[Event], day_range: tuple[int, int] | None = None) -> Counts:
    """Tally activity over ``events``, optionally limited to [start, end) days.

    An accepted trade that voided on solvency counts as a trade but not as an
    accepted one; a superior's unresisted rob of a subordinate counts as
    robbery, never as resisted.
    """
    robbery = resisted = trade = accepted = rejected = farm = donation = concession = 0
    for event in events:
        if day_range is not None and not day_range[0] <= event.day < day_range[1]:
            continue
        if event.kind == ROB:
            robbery += 1
            if event.response == RESP_RESIST:
                resisted += 1
        elif event.kind == TRADE:
            trade += 1
            if event.response == RESP_ACCEPT and event.outcome.detail != "void":
                accepted += 1
            elif event.response == RESP_REJECT:
                rejected += 1
        elif event.kind == FARM:
            farm += 1
        elif event.kind == DONATE:
            donation += 1
        elif event.kind == CONCEDE:
            concession += 1
    return Counts(
        robbery=robbery,
        resisted_robbery=resisted,
        trade=trade,
        accepted_trade=accepted,
        rejected_trade=rejected,
        farm=farm,
        donation=donation,
        concession=concession,
    )


def compute_rates(counts: Counts, violence_literal: bool = False) -> Rates | None:
    """Per-activity rates; None when there was no activity at all."""
    activity = counts.activity
    if activity == 0:
        return None
    violence_numerator = counts.rejected_trade if violence_literal else counts.resisted_robbery
    return Rates(
        rob_rate=counts.robbery / activity,
        violence_rate=violence_numerator / activity,
        trade_rate=counts.trade / activity,
        accepted_trade_rate=counts.accepted_trade / activity,
        farm_rate=counts.farm / activity,
    )


def compute_phase_report(
    events: Sequence[Event],
    commonwealth_day: int | None,
    violence_literal: bool = False,
) -> PhaseReport:
    """Split the timeline at the commonwealth day (that day itself counts after)."""
    if commonwealth_day is None:
        nature = compute_counts(events)
        wealth = Counts()
    else:
        nature = compute_counts(events, (0, commonwealth_day))
        last = max((e.day for e in events), default=commonwealth_day)
        wealth = compute_counts(events, (commonwealth_day, last + 1))
    return PhaseReport(
        state_of_nature=nature,
        state_of_nature_rates=compute_rates(nature, violence_literal),
        commonwealth=wealth,
        commonwealth_rates=compute_rates(wealth, violence_literal),
        commonwealth_day=commonwealth_day,
    )


def rob_intervals(
    events: Sequence[Event], unit: str = "day"
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Per-robber gaps between consecutive robberies, split by earlier outcome.

    Returns (gaps after a resisted robbery, gaps after a non-resisted one);
    non-resisted covers explicit concessions and automatic subordinate robs.
    Protection-voided robs resolved nothing and are excluded.
    """
    if unit not in ("day", "sequence"):
        raise ValueError(f"unit must be 'day' or 'sequence', got {unit!r}")
    by_robber: dict[int, list[Event]] = {}
    for event in events:
        if event.kind == ROB and event.outcome.detail != "protected":
            by_robber.setdefault(event.actor, []).append(event)
    resisted_gaps: list[int] = []
    conceded_gaps: list[int] = []
    for robs in by_robber.values():
        for earlier, later in zip(robs, robs[1:]):
            gap = (later.day - earlier.day) if unit == "day" else (later.sequence - earlier.sequence)
            if earlier.response == RESP_RESIST:
                resisted_gaps.append(gap)
            else:
                conceded_gaps.append(gap)
    return tuple(resisted_gaps), tuple(conceded_gaps)


# -- Student's t machinery ----------------------------------------------------
#
# The two-sided p-value comes from the regularized incomplete beta function
# evaluated with a Lentz continued fraction, accurate to well below 1e-10 for
# the degrees of freedom this package meets; tests pin it against an
# independent statistics library at 1e-9.


def _betacf(a: float, b: float, x: float) -> float:
    max_iter = 300
    eps = 3e-16
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction failed to converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the symmetric continued-fraction split."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T_df| >= |t|) through the incomplete beta identity."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    x = df / (df + t * t)
    return betainc_regularized(df / 2.0, 0.5, x)


def pooled_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> TTestResult | None:
    """Classic two-sample equal-variance t-test; None when degenerate.

    Degenerate means fewer than two points per sample or zero pooled
    variance, where the statistic is undefined.
    """
    n1, n2 = len(sample_a), len(sample_b)
    if n1 < 2 or n2 < 2:
        return None
    mean_a = sum(sample_a) / n1
    mean_b = sum(sample_b) / n2
    ss_a = sum((v - mean_a) ** 2 for v in sample_a)
    ss_b = sum((v - mean_b) ** 2 for v in sample_b)
    df = n1 + n2 - 2
    pooled_var = (ss_a + ss_b) / df
    if pooled_var <= 0.0:
        return None
    t = (mean_a - mean_b) / math.sqrt(pooled_var * (1.0 / n1 + 1.0 / n2))
    return TTestResult(t=t, df=df, p_two_sided=student_t_two_sided_p(t, df))


def build_metrics_report(
    events: Sequence[Event],
    commonwealth_day: int | None,
    violence_literal: bool = False,
) -> MetricsReport:
    resisted, conceded = rob_intervals(events)
    return MetricsReport(
        phases=compute_phase_report(events, commonwealth_day, violence_literal),
        resisted_gaps=resisted,
        conceded_gaps=conceded,
        interval_test=pooled_t_test(resisted, conceded),
    )


# -- serialization -------------------------------------------------------------


def _num(value: object) -> object:
    if isinstance(value, Fraction):
        return float(value)
    return value


def event_to_dict(event: Event) -> dict:
    return {
        "day": event.day,
        "seq": event.sequence,
        "actor": event.actor,
        "kind": event.kind,
        "target": event.target,
        "payload": {k: _num(v) for k, v in event.payload.items()},
        "response": event.response,
        "outcome": {
            "food": {str(k): float(v) for k, v in event.outcome.food.items()},
            "land": {str(k): float(v) for k, v in event.outcome.land.items()},
            "social": {str(k): v for k, v in event.outcome.social.items()},
            "concession": list(event.outcome.concession) if event.outcome.concession else None,
            "detail": event.outcome.detail,
        },
        "reason": event.reason,
    }


def event_from_dict(data: dict) -> Event:
    outcome = data.get("outcome", {})
    concession = outcome.get("concession")
    return Event(
        day=data["day"],
        sequence=data["seq"],
        actor=data["actor"],
        kind=data["kind"],
        target=data.get("target"),
        payload={k: Fraction(v) if isinstance(v, float) else v for k, v in data.get("payload", {}).items()},
        response=data.get("response"),
        outcome=Outcome(
            food={int(k): Fraction(v) for k, v in outcome.get("food", {}).items()},
            land={int(k): Fraction(v) for k, v in outcome.get("land", {}).items()},
            social={int(k): int(v) for k, v in outcome.get("social", {}).items()},
            concession=(concession[0], concession[1]) if concession else None,
            detail=outcome.get("detail", ""),
        ),
        reason=data.get("reason"),
    )


def export_events(events: Iterable[Event], path: str | Path) -> None:
    """Write one JSON object per line, in sequence order."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event_to_dict(event), ensure_ascii=False) + "\n")


def load_events(path: str | Path) -> list[Event]:
    events = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            events.append(event_from_dict(json.loads(line)))
    return events


STATS_HEADER = [
    "day",
    "actor",
    "action",
    "target",
    "pay_type",
    "pay_amount",
    "gain_type",
    "gain_amount",
    "response",
    "outcome",
    "social_delta_actor",
    "social_delta_target",
]


def _stats_row(event: Event) -> list:
    pay_type = pay_amount = gain_type = gain_amount = ""
    if event.kind == TRADE:
        pay_type = str(event.payload.get("pay_type", ""))
        pay_amount = float(event.payload.get("pay_amount", 0))  # type: ignore[arg-type]
        gain_type = str(event.payload.get("gain_type", ""))
        gain_amount = float(event.payload.get("gain_amount", 0))  # type: ignore[arg-type]
    elif event.kind in (ROB, FARM):
        resource = str(event.payload.get("resource", ""))
        deltas = event.outcome.food if resource == "food" else event.outcome.land
        gain_type = resource
        gain_amount = float(deltas.get(event.actor, 0))
    elif event.kind in (DONATE, CONSUME):
        pay_type = str(event.payload.get("resource", ""))
        pay_amount = float(event.payload.get("amount", 0))  # type: ignore[arg-type]
    social = event.outcome.social
    return [
        event.day,
        event.actor,
        event.kind,
        "" if event.target is None else event.target,
        pay_type,
        pay_amount,
        gain_type,
        gain_amount,
        event.response or "",
        event.outcome.detail,
        social.get(event.actor, 0),
        social.get(event.target, 0) if event.target is not None else 0,
    ]


def export_stats_csv(events: Iterable[Event], path: str | Path) -> None:
    """Per-event activity table (UTF-8, comma separated, header row)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATS_HEADER)
        for event in events:
            writer.writerow(_stats_row(event))


PHASE_HEADER = [
    "phase",
    "robbery",
    "resisted_robbery",
    "trade",
    "accepted_trade",
    "farm",
    "activity",
    "rob_rate",
    "violence_rate",
    "trade_rate",
    "accepted_trade_rate",
    "farm_rate",
]


def export_phases_csv(report: PhaseReport, path: str | Path) -> None:
    """Phase summary rows (donations stay out: they never join activity)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    def row(name: str, counts: Counts, rates: Rates | None) -> list:
        rate_cells = (
            ["", "", "", "", ""]
            if rates is None
            else [
                rates.rob_rate,
                rates.violence_rate,
                rates.trade_rate,
                rates.accepted_trade_rate,
                rates.farm_rate,
            ]
        )
        return [
            name,
            counts.robbery,
            counts.resisted_robbery,
            counts.trade,
            counts.accepted_trade,
            counts.farm,
            counts.activity,
            *rate_cells,
        ]

    with target.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PHASE_HEADER)
        writer.writerow(row("state_of_nature", report.state_of_nature, report.state_of_nature_rates))
        writer.writerow(row("commonwealth", report.commonwealth, report.commonwealth_rates))


def rates_to_dict(rates: Rates | None) -> dict | None:
    if rates is None:
        return None
    return {
        "rob_rate": rates.rob_rate,
        "violence_rate": rates.violence_rate,
        "trade_rate": rates.trade_rate,
        "accepted_trade_rate": rates.accepted_trade_rate,
        "farm_rate": rates.farm_rate,
    }


def counts_to_dict(counts: Counts) -> dict:
    return {
        "robbery": counts.robbery,
        "resisted_robbery": counts.resisted_robbery,
        "trade": counts.trade,
        "accepted_trade": counts.accepted_trade,
        "rejected_trade": counts.rejected_trade,
        "farm": counts.farm,
        "donation": counts.donation,
        "concession": counts.concession,
        "activity": counts.activity,
    }


def metrics_to_dict(metrics: MetricsReport) -> dict:
    phases = metrics.phases
    return {
        "commonwealth_day": phases.commonwealth_day,
        "state_of_nature": {
            "counts": counts_to_dict(phases.state_of_nature),
            "rates": rates_to_dict(phases.state_of_nature_rates),
        },
        "commonwealth": {
            "counts": counts_to_dict(phases.commonwealth),
            "rates": rates_to_dict(phases.commonwealth_rates),
        },
        "rob_intervals": {
            "resisted_gaps": list(metrics.resisted_gaps),
            "conceded_gaps": list(metrics.conceded_gaps),
            "t_test": None
            if metrics.interval_test is None
            else {
                "t": metrics.interval_test.t,
                "df": metrics.interval_test.df,
                "p_two_sided": metrics.interval_test.p_two_sided,
            },
        },
    }
