/** Pure view-model: (latest snapshot, event suffix) -> everything rendered.
 *
 * Rates use the same summary-table formulas as the backend analytics; the
 * shared fixture under tests/fixtures guards both sides against drift.
 */

import type { SimEvent, Snapshot } from "./types.js";

export interface ViewModel {
  snapshot: Snapshot | null;
  events: SimEvent[];
  lastSeq: number;
}

export const EMOJI: Record<string, string> = {
  rob: "⚔️",
  farm: "🍚",
  trade: "🤝",
  donate: "🎁",
  concede: "🤝",
  consume: "🍽️",
  admin: "⚙️",
};

export function emojiFor(event: Pick<SimEvent, "kind" | "emoji" | "milestone">): string {
  if (event.milestone === "commonwealth") return "👑";
  if (event.emoji) return event.emoji;
  return EMOJI[event.kind] ?? "❓";
}

export function emptyModel(): ViewModel {
  return { snapshot: null, events: [], lastSeq: -1 };
}

export function withSnapshot(model: ViewModel, snapshot: Snapshot): ViewModel {
  return { ...model, snapshot };
}

/** Append one stream record; duplicates and replays are ignored by sequence. */
export function applyEvent(model: ViewModel, event: SimEvent): ViewModel {
  if (event.seq <= model.lastSeq) return model;
  return { snapshot: model.snapshot, events: [...model.events, event], lastSeq: event.seq };
}

export function applyEvents(model: ViewModel, events: SimEvent[]): ViewModel {
  return events.reduce(applyEvent, model);
}

export interface Counts {
  robbery: number;
  resisted_robbery: number;
  trade: number;
  accepted_trade: number;
  farm: number;
  activity: number;
}

export interface Rates {
  rob_rate: number;
  violence_rate: number;
  trade_rate: number;
  accepted_trade_rate: number;
  farm_rate: number;
}

export function countsFor(events: SimEvent[], fromDay = -Infinity, toDayExclusive = Infinity): Counts {
  const counts = { robbery: 0, resisted_robbery: 0, trade: 0, accepted_trade: 0, farm: 0, activity: 0 };
  for (const event of events) {
    if (event.day < fromDay || event.day >= toDayExclusive) continue;
    if (event.kind === "rob") {
      counts.robbery += 1;
      if (event.response === "resist") counts.resisted_robbery += 1;
    } else if (event.kind === "trade") {
      counts.trade += 1;
      if (event.response === "accept" && event.outcome.detail !== "void") counts.accepted_trade += 1;
    } else if (event.kind === "farm") {
      counts.farm += 1;
    }
  }
  counts.activity = counts.robbery + counts.trade + counts.farm;
  return counts;
}

export function ratesFor(counts: Counts): Rates | null {
  if (counts.activity === 0) return null;
  return {
    rob_rate: counts.robbery / counts.activity,
    violence_rate: counts.resisted_robbery / counts.activity,
    trade_rate: counts.trade / counts.activity,
    accepted_trade_rate: counts.accepted_trade / counts.activity,
    farm_rate: counts.farm / counts.activity,
  };
}

export interface DayRates {
  day: number;
  rates: Rates;
}

/** Cumulative-to-date rates per day, the chart's data. */
export function cumulativeRateSeries(events: SimEvent[]): DayRates[] {
  const days = [...new Set(events.map((e) => e.day))].sort((a, b) => a - b);
  const series: DayRates[] = [];
  for (const day of days) {
    const rates = ratesFor(countsFor(events, -Infinity, day + 1));
    if (rates !== null) series.push({ day, rates });
  }
  return series;
}

export interface PhaseView {
  label: string;
  commonwealthDay: number | null;
  sovereign: number | null;
  nature: Rates | null;
  commonwealth: Rates | null;
}

export function phaseView(model: ViewModel): PhaseView {
  const status = model.snapshot?.commonwealth ?? { formed: false, day: null, sovereign: null };
  const splitDay = status.day;
  const nature = ratesFor(countsFor(model.events, -Infinity, splitDay ?? Infinity));
  const commonwealth = splitDay === null ? null : ratesFor(countsFor(model.events, splitDay, Infinity));
  return {
    label: status.formed ? `Commonwealth since day ${status.day} under Agent ${status.sovereign}` : "State of nature",
    commonwealthDay: status.day,
    sovereign: status.sovereign,
    nature,
    commonwealth,
  };
}

export interface TimelineCell {
  seq: number;
  day: number;
  actor: number;
  kind: string;
  emoji: string;
  summary: string;
  reason: string | null;
}

export function timelineCells(events: SimEvent[]): TimelineCell[] {
  return events.map((event) => ({
    seq: event.seq,
    day: event.day,
    actor: event.actor,
    kind: event.kind,
    emoji: emojiFor(event),
    summary: describeEvent(event),
    reason: event.reason,
  }));
}

export function describeEvent(event: SimEvent): string {
  const actor = event.actor_name ?? `Agent ${event.actor}`;
  const target = event.target === null ? "" : event.target_name ?? `Agent ${event.target}`;
  switch (event.kind) {
    case "farm":
      return `${actor} farmed`;
    case "rob": {
      const how =
        event.outcome.detail === "subordinate"
          ? "robbed its subordinate"
          : event.response === "concede"
            ? "robbed (target conceded)"
            : event.outcome.detail === "protected"
              ? "tried to rob a protected agent"
              : event.outcome.detail === "win"
                ? "robbed and won the fight against"
                : "robbed and lost the fight against";
      return `${actor} ${how} ${target}`.trim();
    }
    case "trade":
      return `${actor} offered a trade to ${target} (${event.response ?? "pending"}${
        event.outcome.detail === "void" ? ", voided" : ""
      })`;
    case "donate":
      return `${actor} donated to ${target}`;
    case "concede":
      return `${actor} conceded to ${target}`;
    case "consume":
      return `${actor} consumed rations`;
    case "admin":
      return event.milestone === "commonwealth" ? `Commonwealth formed under ${actor}` : `admin: ${actor}`;
    default:
      return `${actor} ${event.kind}`;
  }
}
