"""Task pipelines composed from the engines: pose-aligned attribute transfer,
single-image variation recipes, frozen-layer finetuning, and continuous
translation sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn

from . import imageio
from .blending import (AlphaMask, BlendSpec, ShiftSpec, make_box_mask,
                       render_cross_generator_blend, render_two_image_blend, shift_blend)
from .errors import ConfigurationError, DomainError
from .generator import FeatureMap, Generator, HookSet, StyleStack, expand_to_stack, parameter_layer
from .latents import default_pose_dims, pose_align
from .spatial import PadSpec, ResizeSpec, pad_features, resize_features


def default_layer_cut(num_layers: int) -> int:
    """Blend on early layers only, scaling the 12-of-14 rule to this depth."""
    return math.ceil(12 * num_layers / 14)


@dataclass(frozen=True)
class TransferRequest:
    """Pose-aligned attribute transfer: copy what the box covers from the
    reference onto the source, after giving the reference the source's pose."""

    src_styles: StyleStack
    ref_styles: StyleStack
    box: tuple[int, int, int, int] | None  # None: empty selection, nothing transfers
    feather: int = 0
    layer_cut: int | None = None
    alpha_exponent: float = 1.0
    pose_k_dims: int | None = None

    def __post_init__(self):
        if self.alpha_exponent < 1.0:
            raise DomainError("alpha_exponent must be >= 1")
        if self.feather < 0:
            raise DomainError("feather must be non-negative")


def transfer_attributes(gen: Generator, req: TransferRequest) -> torch.Tensor:
    res = gen.config.output_resolution
    layer_cut = req.layer_cut if req.layer_cut is not None else default_layer_cut(gen.config.num_layers)
    if not 0 <= layer_cut < gen.config.num_layers:
        raise DomainError(f"layer_cut {layer_cut} out of range [0, {gen.config.num_layers})")
    k = req.pose_k_dims if req.pose_k_dims is not None else min(
        default_pose_dims(gen.config.latent_dim), req.src_styles.rows.numel())
    aligned_ref = pose_align(req.ref_styles, req.src_styles, k)
    if req.box is None:
        mask = AlphaMask(torch.zeros(res, res))
    else:
        mask = make_box_mask((res, res), req.box, req.feather).powed(req.alpha_exponent)
    spec = BlendSpec(layer_set=frozenset(range(layer_cut + 1)), mode="two-image", mask=mask)
    return render_two_image_blend(gen, req.src_styles, aligned_ref, spec)


# -------------------------------------------------------------- variations

@dataclass(frozen=True)
class RecipeStep:
    """One feature edit applied at a layer during synthesis."""

    kind: str  # pad | resize | shift_blend
    layer: int
    pad: PadSpec | None = None
    resize: ResizeSpec | None = None
    mask: AlphaMask | None = None
    shift: ShiftSpec | None = None

    def __post_init__(self):
        needs = {"pad": self.pad, "resize": self.resize, "shift_blend": self.shift}
        if self.kind not in needs:
            raise DomainError(f"unknown recipe step kind {self.kind!r}")
        if needs[self.kind] is None:
            raise DomainError(f"{self.kind} step is missing its spec")
        if self.kind == "shift_blend" and self.mask is None:
            raise DomainError("shift_blend step needs a mask")

    def apply(self, f: FeatureMap) -> FeatureMap:
        if self.kind == "pad":
            return pad_features(f, self.pad)
        if self.kind == "resize":
            return resize_features(f, self.resize)
        return shift_blend(f, self.mask, self.shift)


def recipe_step_from_json(d: dict) -> RecipeStep:
    kind, layer = d["kind"], int(d["layer"])
    if kind == "pad":
        return RecipeStep(kind, layer, pad=PadSpec(d["mode"], tuple(d["amounts"])))
    if kind == "resize":
        target = tuple(d["target"]) if d.get("target") else None
        return RecipeStep(kind, layer, resize=ResizeSpec(scale=d.get("scale"), target=target,
                                                         method=d.get("method", "bilinear")))
    if kind == "shift_blend":
        mask = AlphaMask(torch.tensor(d["mask"], dtype=torch.float32))
        return RecipeStep(kind, layer, mask=mask, shift=ShiftSpec(tuple(d["offset"])))
    raise DomainError(f"unknown recipe step kind {kind!r}")


def single_image_variations(gen: Generator, w: torch.Tensor,
                            recipe: Sequence[RecipeStep]) -> torch.Tensor:
    """Apply the recipe through edit hooks in one synthesis pass."""
    edits: dict[int, list] = {}
    for step in recipe:
        edits.setdefault(step.layer, []).append(step.apply)
    styles = expand_to_stack(w, gen.config.num_layers)
    img, _ = gen.synthesize(styles, HookSet(edit=edits))
    return img


# -------------------------------------------------------------- finetuning

@dataclass(frozen=True)
class FreezeSpec:
    """Which parts stay fixed during finetuning. Freezing the mapping and the
    affine layers preserves the latent and coefficient spaces of the source
    generator while the synthesis convolutions adapt to the new domain."""

    freeze_mapping: bool = True
    freeze_affine: bool = True
    trainable_layer_set: frozenset[int] | None = None  # None = all synthesis layers

    def trainable_parameters(self, gen: Generator) -> dict[str, torch.Tensor]:
        layers = (self.trainable_layer_set if self.trainable_layer_set is not None
                  else frozenset(range(gen.config.num_layers)))
        out = {}
        for name, param in gen.named_parameters():
            if name.startswith("mapping."):
                if not self.freeze_mapping:
                    out[name] = param
            elif name.startswith("affines."):
                if not self.freeze_affine:
                    out[name] = param
            elif parameter_layer(name, gen.config.num_layers) in layers:
                out[name] = param
        return out


class _Discriminator(nn.Module):
    """Small conv critic for the desk-scale adversarial loop."""

    def __init__(self, resolution: int, seed: int):
        super().__init__()
        g = torch.Generator().manual_seed(seed)
        chans = [3, 16, 32, 64, 64]
        self.convs = nn.ModuleList()
        res = resolution
        for cin, cout in zip(chans, chans[1:]):
            if res <= 2:
                break
            conv = nn.Conv2d(cin, cout, 3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=g) * (cin * 9) ** -0.5)
                conv.bias.zero_()
            self.convs.append(conv)
            res //= 2
        self.head = nn.Linear(self.convs[-1].out_channels * res * res, 1)
        with torch.no_grad():
            self.head.weight.copy_(torch.randn(self.head.weight.shape, generator=g)
                                   * self.head.in_features ** -0.5)
            self.head.bias.zero_()

    def forward(self, x):
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.2)
        return self.head(x.flatten(1))


def load_image_dir(path: str | Path, resolution: int) -> torch.Tensor:
    """Directory of PNGs as a (N,3,H,W) tensor, resized to the given resolution."""
    files = sorted(Path(path).glob("*.png"))
    if not files:
        raise DomainError(f"no PNG files under {path}")
    imgs = []
    for f in files:
        img = imageio.load_png(f).unsqueeze(0)
        if img.shape[-1] != resolution or img.shape[-2] != resolution:
            img = F.interpolate(img, size=(resolution, resolution), mode="bilinear", align_corners=False)
        imgs.append(img)
    return torch.cat(imgs)


def _synthesize_batch(gen: Generator, z: torch.Tensor) -> torch.Tensor:
    w = gen.map_latent(z, truncation=1.0)
    x = gen.const.expand(z.shape[0], -1, -1, -1)
    rgb_style = None
    for i in range(gen.config.num_layers):
        sigma = gen.affines[i](w)  # (B, sigma_width(i))
        conv_style = sigma
        if i == gen.config.num_layers - 1:
            cut = gen.config.in_channels(i)
            conv_style, rgb_style = sigma[:, :cut], sigma[:, cut:]
        x = gen.layer_forward(i, x, conv_style)
    return gen.rgb_forward(x, rgb_style)


@dataclass
class FinetuneResult:
    generator: Generator
    loss_trace: list[tuple[int, float, float]] = field(default_factory=list)  # step, d_loss, g_loss


def finetune_frozen(gen: Generator, images: torch.Tensor | str | Path,
                    spec: FreezeSpec | None = None, steps: int = 10,
                    seed: int = 0, batch_size: int = 4,
                    lr: float = 1e-3) -> FinetuneResult:
    """Adversarial finetuning on an exclusive clone with frozen parts bitwise
    untouched. Uses a tiny discriminator and the non-saturating GAN loss."""
    spec = spec or FreezeSpec()
    resolution = gen.config.output_resolution
    if isinstance(images, (str, Path)):
        images = load_image_dir(images, resolution)
    images = torch.as_tensor(images, dtype=torch.float32)
    if images.ndim != 4 or images.shape[0] == 0:
        raise DomainError("dataset must be a non-empty (N,3,H,W) tensor or PNG directory")

    clone = gen.clone()
    trainable = spec.trainable_parameters(clone)
    if not trainable:
        raise ConfigurationError("freeze spec leaves no trainable parameters")
    for name, p in clone.named_parameters():
        p.requires_grad_(name in trainable)

    disc = _Discriminator(resolution, seed + 1)
    opt_g = torch.optim.Adam(trainable.values(), lr=lr, betas=(0.0, 0.99))
    opt_d = torch.optim.Adam(disc.parameters(), lr=lr, betas=(0.0, 0.99))
    g_rng = torch.Generator().manual_seed(seed)

    trace = []
    for step in range(steps):
        z = torch.randn(batch_size, clone.config.latent_dim, generator=g_rng)
        idx = torch.randint(0, images.shape[0], (batch_size,), generator=g_rng)
        real = images[idx]

        fake = _synthesize_batch(clone, z)
        d_loss = (F.softplus(disc(fake.detach())) + F.softplus(-disc(real))).mean()
        opt_d.zero_grad()
        d_loss.backward()
        opt_d.step()

        g_loss = F.softplus(-disc(fake)).mean()
        opt_g.zero_grad()
        g_loss.backward()
        opt_g.step()
        trace.append((step, float(d_loss.detach()), float(g_loss.detach())))

    for p in clone.parameters():
        p.requires_grad_(True)
    return FinetuneResult(generator=clone, loss_trace=trace)


def continuous_translation_sweep(gen_a: Generator, gen_b: Generator, styles: StyleStack,
                                 alphas: Sequence[float]) -> list[torch.Tensor]:
    """Cross-generator renders at constant blend weights; 0 is gen_a's image,
    1 is gen_b's."""
    num_layers = gen_a.config.num_layers
    out = []
    for a in alphas:
        spec = BlendSpec(layer_set=frozenset(range(num_layers)), mode="constant", constant_alpha=float(a))
        out.append(render_cross_generator_blend(gen_a, gen_b, styles, spec))
    return out
