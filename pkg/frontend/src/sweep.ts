/**
 * Alpha sweep panel logic: a slider drives constant-alpha blend requests.
 * Drags are debounced (250 ms), so only the resting value issues a request;
 * each result lands in the sweep strip keyed by its alpha.
 */

import { StudioApi } from "./api.js";
import { JobPoller } from "./jobs.js";

export interface SweepResult {
  alpha: number;
  resultUri: string;
  bytes: Uint8Array;
}

export interface SweepOptions {
  debounceMs?: number;
  pollIntervalMs?: number;
  layerSet?: number[];
  onResult?: (result: SweepResult) => void;
  onError?: (alpha: number, message: string) => void;
}

export const DEFAULT_DEBOUNCE_MS = 250;

export function clampAlpha(alpha: number): number {
  return Math.min(1, Math.max(0, alpha));
}

export class AlphaSweep {
  private styleA: string | null = null;
  private styleB: string | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly poller: JobPoller;
  readonly results = new Map<number, SweepResult>();

  constructor(private readonly api: StudioApi, private readonly options: SweepOptions = {}) {
    this.poller = new JobPoller(api);
  }

  setStyles(styleA: string, styleB: string): void {
    this.styleA = styleA;
    this.styleB = styleB;
    this.results.clear();
  }

  /** Slider input; only the debounced resting value fires a request. */
  slide(alpha: number): void {
    if (this.timer !== null) clearTimeout(this.timer);
    const value = clampAlpha(alpha);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.requestBlend(value);
    }, this.options.debounceMs ?? DEFAULT_DEBOUNCE_MS);
  }

  /** Issue the blend for one alpha immediately (used by the strip buttons). */
  async requestBlend(alpha: number): Promise<SweepResult | null> {
    if (this.styleA === null || this.styleB === null) return null;
    const value = clampAlpha(alpha);
    try {
      const job = await this.api.blend({
        style_a: this.styleA,
        style_b: this.styleB,
        constant_alpha: value,
        layer_set: this.options.layerSet,
      });
      const done = await this.poller.poll(job.id, { intervalMs: this.options.pollIntervalMs });
      if (done.state === "failed" || done.result_uri === null) {
        this.options.onError?.(value, done.error ?? "job failed");
        return null;
      }
      const bytes = await this.api.assetBytes(done.result_uri);
      const result: SweepResult = { alpha: value, resultUri: done.result_uri, bytes };
      this.results.set(value, result);
      this.options.onResult?.(result);
      return result;
    } catch (err) {
      this.options.onError?.(value, err instanceof Error ? err.message : String(err));
      return null;
    }
  }
}
