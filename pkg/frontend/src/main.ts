/** Dashboard bootstrap: connect, subscribe, repaint on change. */

import { Api } from "./api.js";
import { applyEvent, emptyModel, withSnapshot, type ViewModel } from "./model.js";
import { EventStream } from "./stream.js";
import type { TimelineCell } from "./model.js";
import {
  renderAgentCards,
  renderBanner,
  renderChart,
  renderLog,
  renderReasonPopup,
  renderTimeline,
} from "./ui.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  if (override) return override;
  if (window.location.protocol.startsWith("http") && window.location.port !== "") {
    return window.location.origin;
  }
  return "http://127.0.0.1:8000";
}

function must(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

async function boot(): Promise<void> {
  const api = new Api(apiBase());
  let model: ViewModel = emptyModel();
  let offline = false;
  let selected: TimelineCell | null = null;
  let repaintQueued = false;
  let snapshotTimer: ReturnType<typeof setTimeout> | null = null;

  const banner = must("banner");
  const cards = must("agents");
  const timeline = must("timeline");
  const log = must("log");
  const chart = must("chart");
  const popup = must("popup");

  const onEdit = async (agentId: number, field: string, value: number) => {
    const result = await api.patchAgent(agentId, field, value);
    if (result.ok) await refreshSnapshot();
    return result;
  };

  function repaint(): void {
    if (repaintQueued) return;
    repaintQueued = true;
    requestAnimationFrame(() => {
      repaintQueued = false;
      renderBanner(banner, model, offline);
      renderAgentCards(cards, model, onEdit);
      renderTimeline(timeline, model, (cell) => {
        selected = cell;
        renderReasonPopup(popup, selected);
      });
      renderLog(log, model);
      renderChart(chart, model);
      renderReasonPopup(popup, selected);
    });
  }

  async function refreshSnapshot(): Promise<void> {
    try {
      model = withSnapshot(model, await api.state());
      offline = false;
    } catch {
      offline = true;
    }
    repaint();
  }

  function scheduleSnapshotRefresh(): void {
    if (snapshotTimer !== null) return;
    snapshotTimer = setTimeout(() => {
      snapshotTimer = null;
      void refreshSnapshot();
    }, 250);
  }

  // controls
  must("btn-run").addEventListener("click", () => void api.control({ command: "run" }));
  must("btn-pause").addEventListener("click", () => void api.control({ command: "pause" }).then(refreshSnapshot));
  must("btn-step").addEventListener("click", () => {
    const days = Number((must("step-days") as HTMLInputElement).value) || 1;
    void api.control({ command: "step", days });
  });
  must("btn-reset").addEventListener("click", () => {
    const seedRaw = (must("reset-seed") as HTMLInputElement).value;
    const body: { command: "reset"; seed?: number } = { command: "reset" };
    if (seedRaw !== "") body.seed = Number(seedRaw);
    void api.control(body).then(refreshSnapshot);
  });

  // initial connect with backoff until the server answers
  let delay = 500;
  for (;;) {
    try {
      model = withSnapshot(model, await api.state());
      break;
    } catch {
      offline = true;
      repaint();
      await new Promise((resolve) => setTimeout(resolve, delay));
      delay = Math.min(delay * 2, 10000);
    }
  }
  offline = false;
  repaint();

  const stream = new EventStream(
    (since) => api.eventsUrl(since),
    (event) => {
      model = applyEvent(model, event);
      scheduleSnapshotRefresh();
      repaint();
    },
    (status) => {
      offline = status !== "open";
      if (status === "open") void refreshSnapshot();
      repaint();
    },
  );
  stream.start();
  window.addEventListener("beforeunload", () => stream.close());
}

void boot();
