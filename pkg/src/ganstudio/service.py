"""HTTP job service exposing every pipeline as JSON over HTTP.

Synchronous endpoints (sample, render) answer inline; anything slower is
queued as a job and polled via GET /v1/jobs/{id}. Assets are content-addressed
PNG/CSV/JSON files served from the project directory, so identical requests
yield byte-identical responses.

Error mapping: 400 schema violations, 404 unknown ids, 409 checkpoint hash
mismatch, 500 internal failures (job errors surface in the job record).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

import torch
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import imageio
from .blending import AlphaMask, BlendSpec, render_cross_generator_blend, render_two_image_blend
from .errors import StudioError
from .generator import Generator, StyleStack, expand_to_stack
from .inversion import InversionConfig, invert, trace_csv_bytes
from .jobs import JobQueue
from .latents import fit_sigma_gaussian
from .panorama import default_panorama_plan, knit_panorama
from .project import Project
from .transfer import TransferRequest, transfer_attributes


class SampleRequest(BaseModel):
    seed: int = 0
    truncation: float = Field(default=1.0, ge=0.0, le=1.0)
    count: int = Field(default=1, ge=1, le=64)
    checkpoint_hash: str | None = None


class RenderRequest(BaseModel):
    style_id: str
    checkpoint_hash: str | None = None


class BlendRequest(BaseModel):
    style_a: str
    style_b: str
    mask_uri: str | None = None
    constant_alpha: float | None = Field(default=None, ge=0.0, le=1.0)
    layer_set: list[int] | None = None
    mode: Literal["two-image", "cross-generator", "constant"] = "two-image"
    checkpoint_hash: str | None = None


class InvertRequest(BaseModel):
    image_uri: str
    steps: int = Field(default=200, ge=1, le=20000)
    step_size: float = Field(default=0.01, gt=0)
    prior_weight: float = Field(default=0.1, ge=0)
    perceptual_weight: float = Field(default=1.0, ge=0)
    mse_weight: float = Field(default=1.0, ge=0)
    seed: int = 0
    checkpoint_hash: str | None = None


class PanoramaRequest(BaseModel):
    n: int | None = Field(default=None, ge=2, le=64)
    style_ids: list[str] | None = None
    smoothing_sigma: float = Field(default=0.0, ge=0.0)
    seed: int = 0
    checkpoint_hash: str | None = None


class TransferApiRequest(BaseModel):
    src: str
    ref: str
    box: tuple[int, int, int, int]
    feather: int = Field(default=0, ge=0)
    layer_cut: int | None = None
    alpha_exponent: float = Field(default=1.0, ge=1.0)
    pose_k_dims: int | None = None
    checkpoint_hash: str | None = None


def create_app(project_dir: str | Path, workers: int = 2,
               static_dir: str | Path | None = None,
               alt_generator: Generator | None = None) -> FastAPI:
    """Build the app around one project generator. alt_generator, when given,
    is the finetuned counterpart used by cross-generator blend requests."""
    project = Project(project_dir)
    gen, ckpt_hash = project.ensure_generator()
    jobs = JobQueue(project, workers=workers)
    app = FastAPI(title="ganstudio", version="0.1.0")
    app.state.project = project
    app.state.generator = gen
    app.state.alt_generator = alt_generator
    app.state.checkpoint_hash = ckpt_hash
    app.state.jobs = jobs

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "schema violation", "detail": exc.errors()})

    @app.exception_handler(StudioError)
    async def studio_handler(request: Request, exc: StudioError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def check_hash(given: str | None):
        if given is not None and given != app.state.checkpoint_hash:
            return JSONResponse(status_code=409, content={
                "error": "project checkpoint hash mismatch",
                "expected": app.state.checkpoint_hash})
        return None

    def style(style_id: str) -> StyleStack:
        return project.get_style(style_id, gen.config.num_layers, gen.config.latent_dim)

    def render_bytes(stack: StyleStack) -> bytes:
        with torch.no_grad():
            return imageio.encode_png(gen.render(stack))

    def blend_spec(req: BlendRequest) -> BlendSpec:
        layer_set = frozenset(req.layer_set) if req.layer_set is not None \
            else frozenset(range(gen.config.num_layers))
        if req.mode == "constant" or (req.mask_uri is None and req.constant_alpha is not None):
            return BlendSpec(layer_set=layer_set, mode="constant", constant_alpha=req.constant_alpha)
        if req.mask_uri is None:
            raise StudioError("blend request needs mask_uri or constant_alpha")
        mask = AlphaMask.from_png(project.get_asset(req.mask_uri))
        return BlendSpec(layer_set=layer_set, mode=req.mode, mask=mask)

    # ------------------------------------------------------------ endpoints

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "checkpoint_hash": app.state.checkpoint_hash}

    @app.post("/v1/sample")
    async def sample(req: SampleRequest):
        if conflict := check_hash(req.checkpoint_hash):
            return conflict
        style_ids, image_uris = [], []
        with torch.no_grad():
            for w in gen.sample_styles(req.count, req.seed, req.truncation):
                stack = expand_to_stack(w, gen.config.num_layers)
                style_ids.append(project.put_style(stack))
                image_uris.append(project.put_asset(render_bytes(stack)))
        return {"style_ids": style_ids, "image_uris": image_uris}

    @app.post("/v1/render")
    async def render(req: RenderRequest):
        if conflict := check_hash(req.checkpoint_hash):
            return conflict
        try:
            stack = style(req.style_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"error": f"unknown style {req.style_id}"})
        data = render_bytes(stack)
        project.put_asset(data)
        return Response(content=data, media_type="image/png")

    @app.post("/v1/blend")
    async def blend(req: BlendRequest):
        if conflict := check_hash(req.checkpoint_hash):
            return conflict
        try:
            stack_a, stack_b = style(req.style_a), style(req.style_b)
        except KeyError as e:
            return JSONResponse(status_code=404, content={"error": f"unknown style {e}"})
        if req.mode == "cross-generator" and app.state.alt_generator is None:
            raise StudioError("no alternate generator configured for cross-generator blending")
        spec = blend_spec(req)

        def run(job):
            with torch.no_grad():
                if req.mode == "cross-generator":
                    img = render_cross_generator_blend(gen, app.state.alt_generator, stack_a, spec)
                else:
                    img = render_two_image_blend(gen, stack_a, stack_b, spec)
            return project.put_asset(imageio.encode_png(img))

        job = jobs.submit("blend", req.model_dump(), run)
        return job.to_json_dict()

    @app.post("/v1/invert")
    async def invert_endpoint(req: InvertRequest):
        if conflict := check_hash(req.checkpoint_hash):
            return conflict
        if not project.has_asset(req.image_uri):
            return JSONResponse(status_code=404, content={"error": f"unknown asset {req.image_uri}"})
        target = imageio.load_png(project.get_asset(req.image_uri))
        cfg = InversionConfig(steps=req.steps, step_size=req.step_size,
                              prior_weight=req.prior_weight,
                              perceptual_weight=req.perceptual_weight,
                              mse_weight=req.mse_weight, seed=req.seed)

        def run(job):
            g = fit_sigma_gaussian(gen, n_samples=256, seed=req.seed)
            result = invert(gen, target, g, cfg)
            image_uri = project.put_asset(imageio.encode_png(result.final_image))
            trace_uri = project.put_asset(trace_csv_bytes(result.loss_trace), kind="plans", suffix=".csv")
            manifest = json.dumps({"image_uri": image_uri, "trace_uri": trace_uri,
                                   "best_total": result.best_total()}, sort_keys=True).encode()
            return project.put_asset(manifest, kind="plans", suffix=".json")

        job = jobs.submit("invert", req.model_dump(), run)
        return job.to_json_dict()

    @app.post("/v1/panorama")
    async def panorama(req: PanoramaRequest):
        if conflict := check_hash(req.checkpoint_hash):
            return conflict
        if req.style_ids is not None:
            try:
                stacks = [style(s) for s in req.style_ids]
            except KeyError as e:
                return JSONResponse(status_code=404, content={"error": f"unknown style {e}"})
            latents = [s.rows[0] for s in stacks]
        elif req.n is not None:
            latents = gen.sample_styles(req.n, req.seed)
        else:
            raise StudioError("panorama request needs n or style_ids")

        def run(job):
            plan = default_panorama_plan(gen, latents, req.smoothing_sigma)
            project.put_asset(plan.to_json().encode(), kind="plans", suffix=".json")
            with torch.no_grad():
                img = knit_panorama(gen, plan)
            return project.put_asset(imageio.encode_png(img))

        job = jobs.submit("panorama", req.model_dump(), run)
        return job.to_json_dict()

    @app.post("/v1/transfer")
    async def transfer(req: TransferApiRequest):
        if conflict := check_hash(req.checkpoint_hash):
            return conflict
        try:
            src, ref = style(req.src), style(req.ref)
        except KeyError as e:
            return JSONResponse(status_code=404, content={"error": f"unknown style {e}"})
        treq = TransferRequest(src_styles=src, ref_styles=ref, box=req.box,
                               feather=req.feather, layer_cut=req.layer_cut,
                               alpha_exponent=req.alpha_exponent, pose_k_dims=req.pose_k_dims)

        def run(job):
            with torch.no_grad():
                img = transfer_attributes(gen, treq)
            return project.put_asset(imageio.encode_png(img))

        job = jobs.submit("transfer", req.model_dump(), run)
        return job.to_json_dict()

    @app.get("/v1/jobs/{job_id}")
    async def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": f"unknown job {job_id}"})
        return job.to_json_dict()

    @app.get("/v1/assets/{uri:path}")
    async def get_asset(uri: str):
        if not project.has_asset(uri):
            return JSONResponse(status_code=404, content={"error": f"unknown asset {uri}"})
        data = project.get_asset(uri)
        media = "image/png" if uri.endswith(".png") else (
            "text/csv" if uri.endswith(".csv") else "application/json")
        return Response(content=data, media_type=media)

    @app.post("/v1/masks")
    async def put_mask(request: Request):
        """Upload a grayscale PNG mask; returns its asset URI."""
        data = await request.body()
        AlphaMask.from_png(data)  # validates
        return {"mask_uri": project.put_asset(data, kind="masks")}

    ui_dir = Path(static_dir) if static_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
