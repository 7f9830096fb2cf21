/** DOM rendering for the dashboard panels. No state lives here: every
 * function repaints from the view model. */

import type { ViewModel, TimelineCell } from "./model.js";
import { cumulativeRateSeries, phaseView, timelineCells } from "./model.js";
import type { AgentSnapshot } from "./types.js";

export interface EditHandler {
  (agentId: number, field: string, value: number): Promise<{ ok: boolean; error?: string }>;
}

const EDITORS: Array<{ field: string; label: string; min?: number; max?: number; step?: number }> = [
  { field: "aggressiveness", label: "aggressiveness", min: -1, max: 1, step: 0.01 },
  { field: "covetousness", label: "covetousness", min: 1.1, max: 1.6, step: 0.01 },
  { field: "strength", label: "strength", step: 0.1 },
  { field: "memory_capacity", label: "memory depth", min: 1, step: 1 },
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function roleText(agent: AgentSnapshot): string {
  if (agent.superior !== null) return `subordinate of Agent ${agent.superior}`;
  if (agent.subordinates.length > 0) return `superior of ${agent.subordinates.map((s) => `Agent ${s}`).join(", ")}`;
  return "free agent";
}

export function renderBanner(container: HTMLElement, model: ViewModel, offline: boolean): void {
  const phase = phaseView(model);
  container.innerHTML = "";
  container.classList.toggle("commonwealth", phase.commonwealthDay !== null);
  container.append(el("strong", "phase-label", phase.label));
  const day = model.snapshot?.day ?? 0;
  const dayNode = el("span", "day-counter", `day ${day}`);
  dayNode.dataset.day = String(day);
  container.append(dayNode);
  if (offline) container.append(el("span", "offline-banner", "offline: retrying…"));
}

export function renderAgentCards(
  container: HTMLElement,
  model: ViewModel,
  onEdit: EditHandler,
): void {
  container.innerHTML = "";
  const snapshot = model.snapshot;
  if (!snapshot) return;
  for (const agent of snapshot.agents) {
    const card = el("article", "agent-card");
    card.dataset.agentId = String(agent.id);
    const title = el("h3", undefined, agent.name);
    if (snapshot.commonwealth.sovereign === agent.id) title.append(el("span", "crown", " 👑"));
    card.append(title);
    card.append(el("p", "role", roleText(agent)));
    const stats = el("p", "resources");
    stats.textContent =
      `food ${agent.food.toFixed(2)} · land ${agent.land.toFixed(2)} · ` +
      `social ${agent.social_position}` + (agent.starving ? " · STARVING" : "");
    card.append(stats);

    const pending = agent.pending ?? [];
    if (pending.length > 0) {
      card.append(
        el("p", "pending", `pending: ${pending.map((p) => `${p.kind} from Agent ${p.actor}`).join(", ")}`),
      );
    }

    const editors = el("div", "editors");
    for (const spec of EDITORS) {
      const row = el("label", "editor-row", `${spec.label} `);
      const input = el("input") as HTMLInputElement;
      input.type = "number";
      if (spec.min !== undefined) input.min = String(spec.min);
      if (spec.max !== undefined) input.max = String(spec.max);
      input.step = String(spec.step ?? 0.01);
      const current =
        spec.field === "memory_capacity"
          ? agent.memory_capacity
          : (agent.disposition as unknown as Record<string, number>)[spec.field] ?? 0;
      input.value = spec.field === "memory_capacity" ? String(current) : current.toFixed(2);
      input.dataset.field = spec.field;
      const error = el("span", "edit-error");
      input.addEventListener("change", () => {
        const requested = Number(input.value);
        void onEdit(agent.id, spec.field, requested).then((result) => {
          if (!result.ok) {
            input.value = spec.field === "memory_capacity" ? String(current) : current.toFixed(2);
            error.textContent = result.error ?? "rejected";
          } else {
            error.textContent = "";
          }
        });
      });
      row.append(input, error);
      editors.append(row);
    }
    card.append(editors);

    const memory = el("details", "memory");
    memory.append(el("summary", undefined, `memory (${agent.memory.length}/${agent.memory_capacity})`));
    const list = el("ul");
    for (const line of agent.memory) list.append(el("li", undefined, line));
    memory.append(list);
    card.append(memory);

    container.append(card);
  }
}

export function renderTimeline(
  container: HTMLElement,
  model: ViewModel,
  onCellClick: (cell: TimelineCell) => void,
): void {
  container.innerHTML = "";
  const byDay = new Map<number, TimelineCell[]>();
  for (const cell of timelineCells(model.events)) {
    const bucket = byDay.get(cell.day);
    if (bucket) bucket.push(cell);
    else byDay.set(cell.day, [cell]);
  }
  for (const [day, cells] of [...byDay.entries()].sort((a, b) => a[0] - b[0])) {
    const row = el("div", "timeline-day");
    row.append(el("span", "timeline-day-label", `d${day}`));
    for (const cell of cells) {
      const node = el("button", `timeline-cell kind-${cell.kind}`, cell.emoji);
      node.dataset.seq = String(cell.seq);
      node.dataset.kind = cell.kind;
      node.title = cell.summary;
      node.addEventListener("click", () => onCellClick(cell));
      row.append(node);
    }
    container.append(row);
  }
}

export function renderLog(container: HTMLElement, model: ViewModel, limit = 200): void {
  container.innerHTML = "";
  const recent = model.events.slice(-limit);
  for (const event of recent.reverse()) {
    const cells = timelineCells([event])[0];
    if (!cells) continue;
    const row = el("div", "log-row");
    row.append(el("span", "log-emoji", cells.emoji));
    row.append(el("span", "log-summary", `[d${event.day}#${event.seq}] ${cells.summary}`));
    if (event.reason) row.append(el("span", "log-reason", ` — ${event.reason}`));
    container.append(row);
  }
}

const CHART_SERIES: Array<{ key: "rob_rate" | "trade_rate" | "farm_rate"; color: string; label: string }> = [
  { key: "rob_rate", color: "#c0392b", label: "rob" },
  { key: "trade_rate", color: "#2980b9", label: "trade" },
  { key: "farm_rate", color: "#27ae60", label: "farm" },
];

export function renderChart(container: HTMLElement, model: ViewModel, width = 560, height = 180): void {
  container.innerHTML = "";
  const series = cumulativeRateSeries(model.events.filter((e) => ["rob", "trade", "farm"].includes(e.kind)));
  if (series.length === 0) return;
  const svgNs = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(svgNs, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "rate-chart");
  const maxDay = series[series.length - 1]!.day;
  const x = (day: number) => (maxDay === 0 ? 0 : (day / maxDay) * (width - 40)) + 30;
  const y = (rate: number) => height - 16 - rate * (height - 32);
  for (const { key, color, label } of CHART_SERIES) {
    const points = series.map((row) => `${x(row.day).toFixed(1)},${y(row.rates[key]).toFixed(1)}`).join(" ");
    const line = document.createElementNS(svgNs, "polyline");
    line.setAttribute("points", points);
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", color);
    line.setAttribute("stroke-width", "2");
    line.setAttribute("data-series", label);
    svg.append(line);
  }
  const split = model.snapshot?.commonwealth.day;
  if (split !== null && split !== undefined) {
    const marker = document.createElementNS(svgNs, "line");
    marker.setAttribute("x1", String(x(split)));
    marker.setAttribute("x2", String(x(split)));
    marker.setAttribute("y1", "8");
    marker.setAttribute("y2", String(height - 12));
    marker.setAttribute("stroke", "#7f8c8d");
    marker.setAttribute("stroke-dasharray", "4 3");
    svg.append(marker);
  }
  container.append(svg);
  const legend = el("div", "chart-legend");
  for (const { color, label } of CHART_SERIES) {
    const item = el("span", "legend-item", label);
    item.style.color = color;
    legend.append(item);
  }
  container.append(legend);
}

export function renderReasonPopup(container: HTMLElement, cell: TimelineCell | null): void {
  container.innerHTML = "";
  if (!cell) return;
  container.append(el("strong", undefined, `${cell.emoji} ${cell.summary}`));
  container.append(el("p", "popup-reason", cell.reason ?? "(no reason given)"));
}
