"""Command-line interface mirroring the HTTP service.

Exit codes: 0 success, 2 validation error (bad arguments or domain errors),
1 runtime failure. The project directory comes from --project or the
STUDIO_PROJECT_DIR environment variable, defaulting to ./studio-project.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from pathlib import Path

import torch

from . import imageio
from .blending import AlphaMask, BlendSpec, render_two_image_blend
from .checkpoint import load_checkpoint
from .errors import StudioError
from .generator import Generator, GeneratorConfig, expand_to_stack
from .inversion import InversionConfig, invert, trace_to_csv
from .latents import fit_sigma_gaussian
from .panorama import default_panorama_plan, knit_panorama
from .project import Project
from .transfer import FreezeSpec, TransferRequest, finetune_frozen, transfer_attributes


def _project_dir(args) -> Path:
    return Path(args.project or os.environ.get("STUDIO_PROJECT_DIR", "studio-project"))


def _load_generator(args) -> Generator:
    if args.checkpoint:
        return load_checkpoint(args.checkpoint)
    gen, _ = Project(_project_dir(args)).ensure_generator()
    return gen


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--project", help="project directory (or STUDIO_PROJECT_DIR)")
    p.add_argument("--checkpoint", help="explicit generator checkpoint path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output file or directory")


def _styles_for(gen: Generator, seeds: list[int], truncation: float = 1.0):
    stacks = []
    for seed in seeds:
        w = gen.sample_styles(1, seed, truncation)[0]
        stacks.append(expand_to_stack(w, gen.config.num_layers))
    return stacks


def cmd_sample(args) -> int:
    gen = _load_generator(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with torch.no_grad():
        for i, w in enumerate(gen.sample_styles(args.count, args.seed, args.truncation)):
            img = gen.render(expand_to_stack(w, gen.config.num_layers))
            imageio.save_png(img, out / f"sample_{args.seed}_{i:03d}.png")
    print(f"wrote {args.count} images to {out}")
    return 0


def cmd_blend(args) -> int:
    gen = _load_generator(args)
    a, b = _styles_for(gen, [args.seed, args.seed_b])
    if args.mask:
        spec = BlendSpec(layer_set=frozenset(range(gen.config.num_layers)),
                         mode="two-image", mask=AlphaMask.from_png(args.mask))
    else:
        spec = BlendSpec(layer_set=frozenset(range(gen.config.num_layers)),
                         mode="constant", constant_alpha=args.alpha)
    with torch.no_grad():
        img = render_two_image_blend(gen, a, b, spec)
    imageio.save_png(img, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_panorama(args) -> int:
    gen = _load_generator(args)
    latents = gen.sample_styles(args.n, args.seed)
    plan = default_panorama_plan(gen, latents, args.smoothing_sigma)
    with torch.no_grad():
        img = knit_panorama(gen, plan)
    imageio.save_png(img, args.out)
    if args.plan_out:
        Path(args.plan_out).write_text(plan.to_json())
    print(f"wrote {args.out} ({img.shape[2]}x{img.shape[1]})")
    return 0


def cmd_invert(args) -> int:
    gen = _load_generator(args)
    target = imageio.load_png(args.image)
    g = fit_sigma_gaussian(gen, n_samples=args.fit_samples, seed=args.seed)
    cfg = InversionConfig(steps=args.steps, step_size=args.step_size,
                          prior_weight=args.prior_weight, seed=args.seed)
    result = invert(gen, target, g, cfg)
    imageio.save_png(result.final_image, args.out)
    if args.trace_out:
        trace_to_csv(result.loss_trace, args.trace_out)
    print(f"wrote {args.out} (best total loss {result.best_total():.6f})")
    return 0


def cmd_transfer(args) -> int:
    gen = _load_generator(args)
    src, ref = _styles_for(gen, [args.seed, args.ref_seed])
    req = TransferRequest(src_styles=src, ref_styles=ref, box=tuple(args.box),
                          feather=args.feather, layer_cut=args.layer_cut,
                          alpha_exponent=args.alpha_exponent)
    with torch.no_grad():
        img = transfer_attributes(gen, req)
    imageio.save_png(img, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_finetune(args) -> int:
    gen = _load_generator(args)
    spec = FreezeSpec(freeze_mapping=not args.train_mapping,
                      freeze_affine=not args.train_affine)
    result = finetune_frozen(gen, args.data, spec, steps=args.steps, seed=args.seed)
    from .checkpoint import save_checkpoint
    save_checkpoint(result.generator, args.out)
    print(f"wrote {args.out} after {args.steps} steps")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_project_dir(args), workers=args.workers)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((args.host, args.port))
    sock.listen(128)
    print(f"listening on {args.host}:{sock.getsockname()[1]}", flush=True)
    uvicorn.Server(uvicorn.Config(app, log_level="warning")).run([sock])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ganstudio", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="render seeded samples to PNG files")
    _add_common(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--truncation", type=float, default=1.0)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("blend", help="blend two seeded styles")
    _add_common(p)
    p.add_argument("--seed-b", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--mask", help="grayscale PNG mask path")
    p.set_defaults(fn=cmd_blend, out="blend.png")

    p = sub.add_parser("panorama", help="knit a seeded panorama")
    _add_common(p)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--smoothing-sigma", type=float, default=0.0)
    p.add_argument("--plan-out", help="also write the plan JSON here")
    p.set_defaults(fn=cmd_panorama, out="panorama.png")

    p = sub.add_parser("invert", help="reconstruct an image in coefficient space")
    _add_common(p)
    p.add_argument("image", help="target PNG")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--step-size", type=float, default=0.01)
    p.add_argument("--prior-weight", type=float, default=0.1)
    p.add_argument("--fit-samples", type=int, default=256)
    p.add_argument("--trace-out", help="write the loss trace CSV here")
    p.set_defaults(fn=cmd_invert, out="inverted.png")

    p = sub.add_parser("transfer", help="pose-aligned attribute transfer")
    _add_common(p)
    p.add_argument("--ref-seed", type=int, default=1)
    p.add_argument("--box", type=int, nargs=4, metavar=("X0", "Y0", "X1", "Y1"), required=True)
    p.add_argument("--feather", type=int, default=0)
    p.add_argument("--layer-cut", type=int)
    p.add_argument("--alpha-exponent", type=float, default=1.0)
    p.set_defaults(fn=cmd_transfer, out="transfer.png")

    p = sub.add_parser("finetune", help="frozen-layer adversarial finetuning")
    _add_common(p)
    p.add_argument("data", help="directory of PNG training images")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--train-mapping", action="store_true")
    p.add_argument("--train-affine", action="store_true")
    p.set_defaults(fn=cmd_finetune, out="finetuned.ckpt")

    p = sub.add_parser("serve", help="run the HTTP job service")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--workers", type=int, default=2)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except StudioError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # runtime failure
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
