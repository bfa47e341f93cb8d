/**
 * DOM wiring for the editor page. Logic lives in the tested modules
 * (mask/sweep/jobs/session); this file only binds them to canvas and inputs.
 */

import { Job, StudioApi, sha256Hex } from "./api.js";
import { describeJob, JobPoller } from "./jobs.js";
import { MaskRaster, Point } from "./mask.js";
import { EditorSession } from "./session.js";
import { AlphaSweep } from "./sweep.js";

const ZOOM = 8;

type Tool = "rect" | "free";

export class EditorApp {
  private readonly api: StudioApi;
  private readonly poller: JobPoller;
  private session: EditorSession;
  private sweep: AlphaSweep;
  private tool: Tool = "rect";
  private dragStart: Point | null = null;
  private strokePoints: Point[] = [];

  constructor(private readonly root: Document, resolution = 32, numLayers = 8) {
    this.api = new StudioApi("");
    this.poller = new JobPoller(this.api);
    this.session = new EditorSession(resolution, numLayers);
    this.sweep = new AlphaSweep(this.api, {
      onResult: (result) => this.addSweepImage(result.alpha, result.resultUri),
      onError: (alpha, message) => this.log(`blend a=${alpha.toFixed(2)} failed: ${message}`),
    });
  }

  // ------------------------------------------------------------------ setup

  mount(): void {
    const canvas = this.canvas();
    canvas.width = this.session.resolution * ZOOM;
    canvas.height = this.session.resolution * ZOOM;
    canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.onPointerUp(e));

    this.on("tool-rect", () => (this.tool = "rect"));
    this.on("tool-free", () => (this.tool = "free"));
    this.on("mask-clear", () => {
      this.session.mask.clear();
      this.redraw();
    });
    this.on("mask-fill", () => {
      this.session.mask.fill(255);
      this.redraw();
    });
    this.on("mask-export", () => void this.exportMask());
    this.on("sample", () => void this.samplePair());
    this.on("transfer", () => void this.runTransfer());
    this.on("panorama", () => void this.runPanorama());
    const alpha = this.input("alpha-slider");
    alpha.addEventListener("input", () => {
      this.session.alpha = Number(alpha.value);
      this.sweep.slide(this.session.alpha);
    });
    const maskFile = this.input("mask-import");
    maskFile.addEventListener("change", () => void this.importMask(maskFile));
    this.redraw();
  }

  // ------------------------------------------------------------- mask tools

  private canvasPoint(e: PointerEvent): Point {
    const rect = this.canvas().getBoundingClientRect();
    return {
      x: Math.floor((e.clientX - rect.left) / ZOOM),
      y: Math.floor((e.clientY - rect.top) / ZOOM),
    };
  }

  private onPointerDown(e: PointerEvent): void {
    const p = this.canvasPoint(e);
    this.dragStart = p;
    this.strokePoints = [p];
    if (this.tool === "free") {
      this.session.mask.drawDot(p.x, p.y, this.brushRadius(), 255);
      this.redraw();
    }
  }

  private onPointerMove(e: PointerEvent): void {
    if (this.dragStart === null) return;
    const p = this.canvasPoint(e);
    if (this.tool === "free") {
      this.strokePoints.push(p);
      this.session.mask.drawStroke(this.strokePoints.slice(-2), this.brushRadius(), 255);
      this.redraw();
    } else {
      this.redraw();
      this.previewRect(this.dragStart, p);
    }
  }

  private onPointerUp(e: PointerEvent): void {
    if (this.dragStart === null) return;
    const p = this.canvasPoint(e);
    if (this.tool === "rect") {
      this.session.mask.drawRect(this.dragStart.x, this.dragStart.y, p.x + 1, p.y + 1, 255);
    }
    this.dragStart = null;
    this.strokePoints = [];
    this.redraw();
  }

  private brushRadius(): number {
    return Number(this.input("brush-radius").value || "1.5");
  }

  private feather(): number {
    return Number(this.input("feather-slider").value || "0");
  }

  exportRaster(): MaskRaster {
    return this.session.mask.feathered(this.feather());
  }

  private async exportMask(): Promise<void> {
    const png = this.exportRaster().toPng();
    const uri = await this.api.uploadMask(png);
    this.log(`mask uploaded: ${uri} (sha ${(await sha256Hex(png)).slice(0, 12)})`);
    this.input("mask-uri").value = uri;
  }

  private async importMask(fileInput: HTMLInputElement): Promise<void> {
    const file = fileInput.files?.[0];
    if (!file) return;
    const bytes = new Uint8Array(await file.arrayBuffer());
    const raster = await MaskRaster.fromPng(bytes);
    this.session.setMask(raster);
    this.redraw();
  }

  // -------------------------------------------------------------- pipelines

  private async samplePair(): Promise<void> {
    const seed = Number(this.input("seed").value || "0");
    const body = await this.api.sample(seed, 2);
    [this.session.srcStyleId, this.session.refStyleId] = body.style_ids;
    this.sweep.setStyles(body.style_ids[0], body.style_ids[1]);
    this.img("src-image").src = this.api.assetUrl(body.image_uris[0]);
    this.img("ref-image").src = this.api.assetUrl(body.image_uris[1]);
    this.log(`sampled pair from seed ${seed}`);
  }

  private async runTransfer(): Promise<void> {
    const { srcStyleId, refStyleId } = this.session;
    if (!srcStyleId || !refStyleId) return this.log("sample a pair first");
    const box = this.maskBoundingBox();
    if (!box) return this.log("draw a mask first");
    const job = await this.api.transfer({
      src: srcStyleId,
      ref: refStyleId,
      box,
      feather: this.feather(),
      layer_cut: this.session.layerCut,
    });
    await this.watch(job);
  }

  private async runPanorama(): Promise<void> {
    const seed = Number(this.input("seed").value || "0");
    const job = await this.api.panorama({ n: 4, seed, smoothing_sigma: 1.0 });
    await this.watch(job);
  }

  private async watch(job: Job): Promise<void> {
    this.session.trackJob(job.id);
    this.log(describeJob(job));
    const done = await this.poller.poll(job.id, { onUpdate: (j) => this.log(describeJob(j)) });
    this.session.settleJob(job.id);
    if (done.state === "done" && done.result_uri) {
      this.img("result-image").src = this.api.assetUrl(done.result_uri);
    }
  }

  private maskBoundingBox(): [number, number, number, number] | null {
    const m = this.session.mask;
    let x0 = m.width, y0 = m.height, x1 = -1, y1 = -1;
    for (let y = 0; y < m.height; y++) {
      for (let x = 0; x < m.width; x++) {
        if (m.at(x, y) > 0) {
          x0 = Math.min(x0, x); y0 = Math.min(y0, y);
          x1 = Math.max(x1, x); y1 = Math.max(y1, y);
        }
      }
    }
    return x1 < 0 ? null : [x0, y0, x1 + 1, y1 + 1];
  }

  // ----------------------------------------------------------------- render

  private redraw(): void {
    const ctx = this.canvas().getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    const m = this.session.mask;
    for (let y = 0; y < m.height; y++) {
      for (let x = 0; x < m.width; x++) {
        const v = m.at(x, y);
        ctx.fillStyle = `rgba(255, 80, 40, ${v / 255 * 0.8})`;
        ctx.clearRect(x * ZOOM, y * ZOOM, ZOOM, ZOOM);
        ctx.fillRect(x * ZOOM, y * ZOOM, ZOOM, ZOOM);
      }
    }
  }

  private previewRect(a: Point, b: Point): void {
    const ctx = this.canvas().getContext("2d")!;
    ctx.strokeStyle = "#ff5028";
    ctx.strokeRect(Math.min(a.x, b.x) * ZOOM, Math.min(a.y, b.y) * ZOOM,
                   (Math.abs(b.x - a.x) + 1) * ZOOM, (Math.abs(b.y - a.y) + 1) * ZOOM);
  }

  private addSweepImage(alpha: number, uri: string): void {
    const strip = this.root.getElementById("sweep-strip")!;
    const img = this.root.createElement("img");
    img.src = this.api.assetUrl(uri);
    img.title = `alpha ${alpha.toFixed(2)}`;
    img.className = "sweep-thumb";
    strip.appendChild(img);
  }

  private log(message: string): void {
    const list = this.root.getElementById("job-log")!;
    const item = this.root.createElement("li");
    item.textContent = message;
    list.prepend(item);
  }

  // ------------------------------------------------------------------ utils

  private canvas(): HTMLCanvasElement {
    return this.root.getElementById("mask-canvas") as HTMLCanvasElement;
  }

  private input(id: string): HTMLInputElement {
    return this.root.getElementById(id) as HTMLInputElement;
  }

  private img(id: string): HTMLImageElement {
    return this.root.getElementById(id) as HTMLImageElement;
  }

  private on(id: string, handler: () => void): void {
    this.root.getElementById(id)?.addEventListener("click", handler);
  }
}
