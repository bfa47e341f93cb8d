/**
 * In-memory stand-in for the studio service implementing the documented
 * endpoint contract: content-addressed assets, FIFO-ish jobs that stay
 * "running" for a configurable number of polls, and blend endpoint identity
 * (alpha 0 returns the style_a render bytes, alpha 1 the style_b bytes).
 * Every request is appended to `log` for request-log assertions.
 */

import { FetchLike, Job, sha256Hex } from "../src/api.js";
import { encodeGrayPng } from "../src/png.js";

interface MockJob {
  job: Job;
  pollsUntilDone: number;
  resultBytes: Uint8Array | null;
}

function styleRender(styleId: string): Uint8Array {
  // deterministic fake render: raster derived from the style id
  const data = new Uint8Array(16 * 16);
  for (let i = 0; i < data.length; i++) {
    data[i] = (styleId.charCodeAt(i % styleId.length) * (i + 1)) % 256;
  }
  return encodeGrayPng({ width: 16, height: 16, data });
}

export class MockServer {
  readonly log: string[] = [];
  readonly jobs = new Map<string, MockJob>();
  pollsUntilDone = 0;
  failBlendWith: string | null = null;
  private assets = new Map<string, Uint8Array>();
  private nextJob = 1;

  renderBytes(styleId: string): Uint8Array {
    return styleRender(styleId);
  }

  private async putAsset(bytes: Uint8Array): Promise<string> {
    const uri = `images/${await sha256Hex(bytes)}.png`;
    this.assets.set(uri, bytes);
    return uri;
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    this.log.push(`${method} ${url}`);
    const body = init?.body ? JSON.parse(init.body as string) : {};

    if (url.endsWith("/v1/render") && method === "POST") {
      const bytes = styleRender(body.style_id);
      await this.putAsset(bytes);
      return new Response(bytes as unknown as BodyInit, {
        status: 200,
        headers: { "content-type": "image/png" },
      });
    }

    if (url.endsWith("/v1/blend") && method === "POST") {
      const id = `job-${this.nextJob++}`;
      const job: Job = { id, kind: "blend", state: "queued", request: body,
                         result_uri: null, error: null, timings: {} };
      let resultBytes: Uint8Array | null = null;
      if (this.failBlendWith === null) {
        const alpha = body.constant_alpha as number;
        if (alpha === 0.0) resultBytes = styleRender(body.style_a);
        else if (alpha === 1.0) resultBytes = styleRender(body.style_b);
        else {
          const a = styleRender(body.style_a);
          resultBytes = new Uint8Array(a.length);
          resultBytes.set(a);
          resultBytes[resultBytes.length - 1] = Math.round(255 * alpha);
        }
      }
      this.jobs.set(id, { job, pollsUntilDone: this.pollsUntilDone, resultBytes });
      return this.json(job);
    }

    const jobMatch = url.match(/\/v1\/jobs\/([^/]+)$/);
    if (jobMatch && method === "GET") {
      const entry = this.jobs.get(jobMatch[1]);
      if (!entry) return this.json({ error: "unknown job" }, 404);
      if (entry.pollsUntilDone > 0) {
        entry.pollsUntilDone -= 1;
        entry.job.state = "running";
      } else if (entry.resultBytes === null) {
        entry.job.state = "failed";
        entry.job.error = this.failBlendWith ?? "job failed";
      } else {
        entry.job.state = "done";
        entry.job.result_uri = await this.putAsset(entry.resultBytes);
      }
      return this.json(entry.job);
    }

    const assetMatch = url.match(/\/v1\/assets\/(.+)$/);
    if (assetMatch && method === "GET") {
      const bytes = this.assets.get(assetMatch[1]);
      if (!bytes) return this.json({ error: "unknown asset" }, 404);
      return new Response(bytes as unknown as BodyInit, { status: 200 });
    }

    if (url.endsWith("/v1/sample") && method === "POST") {
      const ids = Array.from({ length: body.count ?? 1 },
                             (_, i) => `st-${body.seed ?? 0}-${i}`);
      const uris: string[] = [];
      for (const id of ids) uris.push(await this.putAsset(styleRender(id)));
      return this.json({ style_ids: ids, image_uris: uris });
    }

    return this.json({ error: `unhandled ${method} ${url}` }, 404);
  };

  countMatching(pattern: RegExp): number {
    return this.log.filter((line) => pattern.test(line)).length;
  }
}
