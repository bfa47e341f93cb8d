import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { sha256Hex, StudioApi } from "../src/api.js";
import { AlphaSweep, clampAlpha, SweepResult } from "../src/sweep.js";
import { MockServer } from "./mockServer.js";

describe("alpha clamp", () => {
  it("clamps into [0,1]", () => {
    expect(clampAlpha(-0.5)).toBe(0);
    expect(clampAlpha(1.5)).toBe(1);
    expect(clampAlpha(0.25)).toBe(0.25);
  });
});

describe("alpha sweep panel", () => {
  let server: MockServer;
  let api: StudioApi;
  let results: SweepResult[];
  let sweep: AlphaSweep;

  beforeEach(() => {
    server = new MockServer();
    api = new StudioApi("", server.fetch);
    results = [];
    sweep = new AlphaSweep(api, {
      pollIntervalMs: 1,
      onResult: (r) => results.push(r),
    });
    sweep.setStyles("st-src", "st-ref");
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("slider at 0 displays the source render (asset hash equality)", async () => {
    const result = await sweep.requestBlend(0.0);
    expect(result).not.toBeNull();
    const renderHash = await sha256Hex(server.renderBytes("st-src"));
    expect(await sha256Hex(result!.bytes)).toBe(renderHash);
    expect(result!.resultUri).toBe(`images/${renderHash}.png`);
  });

  it("slider at 1 displays the target render (asset hash equality)", async () => {
    const result = await sweep.requestBlend(1.0);
    const renderHash = await sha256Hex(server.renderBytes("st-ref"));
    expect(await sha256Hex(result!.bytes)).toBe(renderHash);
  });

  it("a drag issues exactly one request per debounced stop", async () => {
    vi.useFakeTimers();
    for (const alpha of [0.1, 0.2, 0.35, 0.5, 0.8, 1.0]) {
      sweep.slide(alpha);
      await vi.advanceTimersByTimeAsync(50); // fast drag: under the debounce
    }
    expect(server.countMatching(/POST .*\/v1\/blend/)).toBe(0);
    await vi.advanceTimersByTimeAsync(250);
    await vi.runAllTimersAsync();
    expect(server.countMatching(/POST .*\/v1\/blend/)).toBe(1);
    expect(results.length).toBe(1);
    expect(results[0].alpha).toBe(1.0);

    // a second stop issues a second request
    sweep.slide(0.0);
    await vi.advanceTimersByTimeAsync(250);
    await vi.runAllTimersAsync();
    expect(server.countMatching(/POST .*\/v1\/blend/)).toBe(2);
  });

  it("reports job failures through onError", async () => {
    const errors: string[] = [];
    const failing = new AlphaSweep(api, {
      pollIntervalMs: 1,
      onError: (_alpha, message) => errors.push(message),
    });
    failing.setStyles("st-a", "st-b");
    server.failBlendWith = "synthesis exploded";
    const result = await failing.requestBlend(0.5);
    expect(result).toBeNull();
    expect(errors).toEqual(["synthesis exploded"]);
  });

  it("does nothing before styles are selected", async () => {
    const fresh = new AlphaSweep(api, {});
    expect(await fresh.requestBlend(0.5)).toBeNull();
    expect(server.countMatching(/blend/)).toBe(0);
  });
});
