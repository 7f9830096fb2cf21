/** Server-sent-events subscription with gap-free resume.
 *
 * Reconnects always pass the last seen sequence, so a dropped stream picks
 * up exactly where it left off; the reducer drops any duplicate frames.
 */

import type { SimEvent } from "./types.js";

export type StreamStatus = "connecting" | "open" | "retrying";

export class EventStream {
  private source: EventSource | null = null;
  private lastSeq: number;
  private retryDelayMs = 1000;
  private closed = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly urlFor: (since: number) => string,
    private readonly onRecord: (event: SimEvent) => void,
    private readonly onStatus: (status: StreamStatus) => void = () => {},
    since = -1,
  ) {
    this.lastSeq = since;
  }

  start(): void {
    if (this.closed) return;
    this.onStatus("connecting");
    this.source = new EventSource(this.urlFor(this.lastSeq));
    this.source.addEventListener("open", () => {
      this.retryDelayMs = 1000;
      this.onStatus("open");
    });
    this.source.addEventListener("sim", (raw) => {
      const event = JSON.parse((raw as MessageEvent<string>).data) as SimEvent;
      if (event.seq > this.lastSeq) {
        this.lastSeq = event.seq;
        this.onRecord(event);
      }
    });
    this.source.addEventListener("error", () => {
      // rebuild the connection ourselves so the resume cursor is in the URL
      this.source?.close();
      this.source = null;
      if (this.closed) return;
      this.onStatus("retrying");
      this.retryTimer = setTimeout(() => this.start(), this.retryDelayMs);
      this.retryDelayMs = Math.min(this.retryDelayMs * 2, 15000);
    });
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.source?.close();
    this.source = null;
  }
}
