/**
 * Mask raster model backing the editor canvas.
 *
 * The raster always matches the generator's output resolution (the canvas
 * zooms for display instead of resampling), values are 0..255, and exports go
 * through the lossless grayscale PNG codec so export -> import round-trips
 * byte-identically.
 */

import { decodeGrayPng, encodeGrayPng, GrayImage } from "./png.js";

export interface Point {
  x: number;
  y: number;
}

export class MaskRaster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, data?: Uint8Array) {
    if (width < 1 || height < 1) throw new Error(`bad raster size ${width}x${height}`);
    if (data && data.length !== width * height) {
      throw new Error(`raster data length ${data.length} does not match ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = data ? data.slice() : new Uint8Array(width * height);
  }

  clone(): MaskRaster {
    return new MaskRaster(this.width, this.height, this.data);
  }

  clear(): void {
    this.data.fill(0);
  }

  fill(value = 255): void {
    this.data.fill(value & 0xff);
  }

  at(x: number, y: number): number {
    return this.data[y * this.width + x];
  }

  set(x: number, y: number, value: number): void {
    if (x >= 0 && x < this.width && y >= 0 && y < this.height) {
      this.data[y * this.width + x] = value & 0xff;
    }
  }

  /** Paint the half-open rectangle [x0,x1) x [y0,y1). */
  drawRect(x0: number, y0: number, x1: number, y1: number, value = 255): void {
    const ax = Math.max(0, Math.min(x0, x1));
    const bx = Math.min(this.width, Math.max(x0, x1));
    const ay = Math.max(0, Math.min(y0, y1));
    const by = Math.min(this.height, Math.max(y0, y1));
    for (let y = ay; y < by; y++) {
      this.data.fill(value & 0xff, y * this.width + ax, y * this.width + bx);
    }
  }

  /** Stamp a filled disc; the freehand tool chains these along the pointer path. */
  drawDot(cx: number, cy: number, radius: number, value = 255): void {
    const r2 = radius * radius;
    for (let y = Math.floor(cy - radius); y <= Math.ceil(cy + radius); y++) {
      for (let x = Math.floor(cx - radius); x <= Math.ceil(cx + radius); x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r2) this.set(x, y, value);
      }
    }
  }

  /** Freehand stroke: discs along each segment at sub-pixel steps. */
  drawStroke(points: Point[], radius: number, value = 255): void {
    if (points.length === 0) return;
    this.drawDot(points[0].x, points[0].y, radius, value);
    for (let i = 1; i < points.length; i++) {
      const a = points[i - 1];
      const b = points[i];
      const steps = Math.max(1, Math.ceil(Math.hypot(b.x - a.x, b.y - a.y)));
      for (let s = 1; s <= steps; s++) {
        const t = s / steps;
        this.drawDot(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), radius, value);
      }
    }
  }

  /**
   * Linear falloff of the given pixel width around the solid (255) region.
   * Feather 0 returns the raster unchanged; solid pixels are never dimmed.
   */
  feathered(feather: number): MaskRaster {
    if (feather <= 0) return this.clone();
    const solid: Point[] = [];
    for (let y = 0; y < this.height; y++) {
      for (let x = 0; x < this.width; x++) {
        if (this.at(x, y) === 255) solid.push({ x, y });
      }
    }
    const out = this.clone();
    if (solid.length === 0) return out;
    for (let y = 0; y < this.height; y++) {
      for (let x = 0; x < this.width; x++) {
        if (this.at(x, y) === 255) continue;
        let best = Infinity;
        for (const p of solid) {
          const d = Math.hypot(x - p.x, y - p.y);
          if (d < best) best = d;
        }
        const soft = Math.round(255 * Math.max(0, 1 - best / feather));
        out.set(x, y, Math.max(this.at(x, y), soft));
      }
    }
    return out;
  }

  toPng(): Uint8Array {
    return encodeGrayPng({ width: this.width, height: this.height, data: this.data });
  }

  static async fromPng(bytes: Uint8Array): Promise<MaskRaster> {
    const img: GrayImage = await decodeGrayPng(bytes);
    return new MaskRaster(img.width, img.height, img.data);
  }

  equals(other: MaskRaster): boolean {
    if (other.width !== this.width || other.height !== this.height) return false;
    return this.data.every((v, i) => v === other.data[i]);
  }
}
