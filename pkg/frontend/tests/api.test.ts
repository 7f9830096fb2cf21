/** API wrappers: URL shapes and the 422 detail surface. */

import { afterEach, describe, expect, it, vi } from "vitest";

import { Api } from "../src/api.js";

afterEach(() => vi.unstubAllGlobals());

function stubFetch(status: number, body: unknown) {
  const mock = vi.fn(async () => new Response(JSON.stringify(body), { status }));
  vi.stubGlobal("fetch", mock);
  return mock;
}

describe("Api", () => {
  it("builds event stream urls with the resume cursor", () => {
    const api = new Api("http://host:8000/");
    expect(api.eventsUrl(41)).toBe("http://host:8000/api/events?since=41");
  });

  it("fetches state", async () => {
    const mock = stubFetch(200, { day: 3, agents: [] });
    const api = new Api("http://host:8000");
    const snap = await api.state();
    expect(snap.day).toBe(3);
    expect(mock).toHaveBeenCalledWith("http://host:8000/api/state");
  });

  it("posts control commands", async () => {
    const mock = stubFetch(200, { ok: true, day: 4 });
    await new Api("http://host:8000").control({ command: "step", days: 1 });
    const [url, init] = mock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://host:8000/api/control");
    expect(JSON.parse(init.body as string)).toEqual({ command: "step", days: 1 });
  });

  it("surfaces the 422 range message from a rejected patch", async () => {
    stubFetch(422, { detail: "covetousness must be within [1.1, 1.6]" });
    const result = await new Api("http://host:8000").patchAgent(0, "covetousness", 2.0);
    expect(result.ok).toBe(false);
    expect(result.status).toBe(422);
    expect(result.error).toContain("[1.1, 1.6]");
  });

  it("returns ok on accepted patches", async () => {
    stubFetch(200, { ok: true, day: 2 });
    const result = await new Api("http://host:8000").patchAgent(0, "strength", -0.5);
    expect(result.ok).toBe(true);
  });
});
