/** Thin fetch wrappers over the sim service endpoints. */

import type { ControlCommand, Snapshot } from "./types.js";

export interface PatchResult {
  ok: boolean;
  status: number;
  error?: string;
}

export class Api {
  constructor(readonly base: string) {}

  private url(path: string): string {
    return `${this.base.replace(/\/$/, "")}${path}`;
  }

  async state(): Promise<Snapshot> {
    const response = await fetch(this.url("/api/state"));
    if (!response.ok) throw new Error(`state fetch failed: HTTP ${response.status}`);
    return (await response.json()) as Snapshot;
  }

  async control(command: ControlCommand): Promise<{ ok: boolean; day: number }> {
    const response = await fetch(this.url("/api/control"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(command),
    });
    if (!response.ok) throw new Error(`control failed: HTTP ${response.status}`);
    return (await response.json()) as { ok: boolean; day: number };
  }

  /** PATCH an agent field; a 422 carries the legal-range message. */
  async patchAgent(agentId: number, field: string, value: number): Promise<PatchResult> {
    const response = await fetch(this.url(`/api/agents/${agentId}`), {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ field, value }),
    });
    if (response.ok) return { ok: true, status: response.status };
    let error = `HTTP ${response.status}`;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) error = body.detail;
    } catch {
      /* non-JSON error body: keep the status text */
    }
    return { ok: false, status: response.status, error };
  }

  eventsUrl(since: number): string {
    return this.url(`/api/events?since=${since}`);
  }
}
