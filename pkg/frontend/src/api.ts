/**
 * Typed client for the studio service. All project mutation goes through
 * these documented endpoints; the editor holds no other write path.
 */

export interface Job {
  id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed";
  request: Record<string, unknown>;
  result_uri: string | null;
  error: string | null;
  timings: Record<string, number>;
}

export interface SampleResponse {
  style_ids: string[];
  image_uris: string[];
}

export interface BlendRequest {
  style_a: string;
  style_b: string;
  mask_uri?: string;
  constant_alpha?: number;
  layer_set?: number[];
  mode?: "two-image" | "cross-generator" | "constant";
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class StudioApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      const body = await response.text();
      throw new ApiError(response.status, `${path} -> ${response.status}: ${body}`);
    }
    return response;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await response.json()) as T;
  }

  sample(seed: number, count: number, truncation = 1.0): Promise<SampleResponse> {
    return this.postJson("/v1/sample", { seed, count, truncation });
  }

  async renderBytes(styleId: string): Promise<Uint8Array> {
    const response = await this.request("/v1/render", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ style_id: styleId }),
    });
    return new Uint8Array(await response.arrayBuffer());
  }

  blend(req: BlendRequest): Promise<Job> {
    return this.postJson("/v1/blend", req);
  }

  transfer(req: Record<string, unknown>): Promise<Job> {
    return this.postJson("/v1/transfer", req);
  }

  panorama(req: Record<string, unknown>): Promise<Job> {
    return this.postJson("/v1/panorama", req);
  }

  invert(req: Record<string, unknown>): Promise<Job> {
    return this.postJson("/v1/invert", req);
  }

  async job(id: string): Promise<Job> {
    const response = await this.request(`/v1/jobs/${id}`);
    return (await response.json()) as Job;
  }

  async assetBytes(uri: string): Promise<Uint8Array> {
    const response = await this.request(`/v1/assets/${uri}`);
    return new Uint8Array(await response.arrayBuffer());
  }

  assetUrl(uri: string): string {
    return `${this.base}/v1/assets/${uri}`;
  }

  async uploadMask(png: Uint8Array): Promise<string> {
    const response = await this.request("/v1/masks", {
      method: "POST",
      headers: { "content-type": "image/png" },
      body: png as unknown as BodyInit,
    });
    const body = (await response.json()) as { mask_uri: string };
    return body.mask_uri;
  }
}

/** SHA-256 hex digest; used to compare displayed assets with render results. */
export async function sha256Hex(bytes: Uint8Array): Promise<string> {
  const digest = await crypto.subtle.digest("SHA-256", bytes as unknown as BufferSource);
  return [...new Uint8Array(digest)].map((b) => b.toString(16).padStart(2, "0")).join("");
}
