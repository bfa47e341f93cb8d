/**
 * Editor session state: selected styles, the working mask, blend controls,
 * and the set of jobs still in flight. The mask raster is pinned to the
 * generator's output resolution; alpha is clamped to [0,1].
 */

import { MaskRaster } from "./mask.js";
import { clampAlpha } from "./sweep.js";

export class EditorSession {
  readonly resolution: number;
  srcStyleId: string | null = null;
  refStyleId: string | null = null;
  mask: MaskRaster;
  private alphaValue = 0.5;
  layerCut: number;
  readonly pendingJobs = new Set<string>();

  constructor(resolution: number, numLayers: number) {
    this.resolution = resolution;
    this.mask = new MaskRaster(resolution, resolution);
    this.layerCut = numLayers - 1;
  }

  get alpha(): number {
    return this.alphaValue;
  }

  set alpha(value: number) {
    this.alphaValue = clampAlpha(value);
  }

  setMask(mask: MaskRaster): void {
    if (mask.width !== this.resolution || mask.height !== this.resolution) {
      throw new Error(
        `mask raster ${mask.width}x${mask.height} does not match output resolution ${this.resolution}`,
      );
    }
    this.mask = mask;
  }

  trackJob(id: string): void {
    this.pendingJobs.add(id);
  }

  settleJob(id: string): void {
    this.pendingJobs.delete(id);
  }
}
