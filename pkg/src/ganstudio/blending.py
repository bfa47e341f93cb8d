"""Alpha masks and every feature-interpolation mode.

Blends are convex combinations (1-a)*fA + a*fB of features from two
synchronized synthesis branches. Where the mask is exactly 0 or 1 the blend
returns the corresponding branch bit-for-bit, so endpoint masks reproduce
plain renders exactly; interior values are clamped to the elementwise
[min, max] envelope to keep the convexity bound tight in float32.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from . import imageio
from .errors import ConfigurationError, DomainError
from .generator import FeatureMap, Generator, StyleStack

BLEND_MODES = ("two-image", "cross-generator", "constant")
SLOW_EXPONENT = 1.0
FAST_EXPONENT = 3.0


class AlphaMask:
    """Spatial blending weights in [0,1] at a canonical resolution.

    Masks are resampled bilinearly to each layer's resolution at use time; a
    constant mask stays constant under resampling.
    """

    def __init__(self, data: torch.Tensor):
        data = torch.as_tensor(data, dtype=torch.float32)
        if data.ndim != 2:
            raise DomainError(f"mask must be HxW, got shape {tuple(data.shape)}")
        if not torch.isfinite(data).all() or data.min() < 0 or data.max() > 1:
            raise DomainError("mask entries must be finite and lie in [0,1]")
        self.data = data

    @classmethod
    def constant(cls, value: float, resolution: tuple[int, int] = (1, 1)) -> "AlphaMask":
        return cls(torch.full(resolution, float(value)))

    @classmethod
    def from_png(cls, path_or_bytes) -> "AlphaMask":
        return cls(imageio.load_mask_png(path_or_bytes))

    def to_png_bytes(self) -> bytes:
        return imageio.encode_mask_png(self.data)

    @property
    def canonical_resolution(self) -> tuple[int, int]:
        return (self.data.shape[0], self.data.shape[1])

    def at_resolution(self, height: int, width: int) -> torch.Tensor:
        if (height, width) == self.canonical_resolution:
            return self.data
        m = self.data.reshape(1, 1, *self.data.shape)
        return F.interpolate(m, size=(height, width), mode="bilinear", align_corners=False)[0, 0]

    def powed(self, exponent: float) -> "AlphaMask":
        if exponent == 1.0:
            return self
        return AlphaMask(self.data ** float(exponent))


@dataclass(frozen=True)
class BlendSpec:
    """Which layers to blend at, with what weights, in which mode."""

    layer_set: frozenset[int]
    mode: str = "two-image"
    mask: AlphaMask | None = None
    constant_alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "layer_set", frozenset(int(i) for i in self.layer_set))
        if self.mode not in BLEND_MODES:
            raise DomainError(f"unknown blend mode {self.mode!r}, expected one of {BLEND_MODES}")
        if self.mode == "constant":
            if self.constant_alpha is None:
                raise DomainError("constant mode requires constant_alpha")
            if not 0.0 <= self.constant_alpha <= 1.0:
                raise DomainError("constant_alpha must lie in [0,1]")
        elif self.mask is None:
            raise DomainError(f"{self.mode} mode requires a mask")

    def alpha_at(self, height: int, width: int) -> torch.Tensor:
        if self.mode == "constant":
            return torch.full((height, width), float(self.constant_alpha))
        return self.mask.at_resolution(height, width)

    def validate_layers(self, num_layers: int) -> None:
        bad = [i for i in self.layer_set if not 0 <= i < num_layers]
        if bad:
            raise DomainError(f"blend layer indices out of range: {sorted(bad)}")


@dataclass(frozen=True)
class ShiftSpec:
    """Integer feature-pixel translation (dy, dx) used by shift_blend."""

    offset: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "offset", (int(self.offset[0]), int(self.offset[1])))


def make_linear_mask(resolution: tuple[int, int], axis: str = "horizontal",
                     start_frac: float = 0.0, end_frac: float = 1.0,
                     speed: str | float = "slow") -> AlphaMask:
    """Ramp mask: 0 before start_frac, 1 after end_frac, a monotone power ramp
    between. speed "slow" is exponent 1, "fast" exponent 3; a numeric speed is
    used as the exponent directly."""
    if not 0.0 <= start_frac < end_frac <= 1.0:
        raise DomainError(f"need 0 <= start_frac < end_frac <= 1, got {start_frac}, {end_frac}")
    if axis not in ("horizontal", "vertical"):
        raise DomainError(f"axis must be horizontal or vertical, got {axis!r}")
    exponent = {"slow": SLOW_EXPONENT, "fast": FAST_EXPONENT}.get(speed, speed)
    exponent = float(exponent)
    if exponent < 1.0:
        raise DomainError("ramp exponent must be >= 1")
    h, w = int(resolution[0]), int(resolution[1])
    n = w if axis == "horizontal" else h
    pos = torch.linspace(0.0, 1.0, n) if n > 1 else torch.zeros(1)
    ramp = ((pos - start_frac) / (end_frac - start_frac)).clamp(0.0, 1.0) ** exponent
    data = ramp.expand(h, w) if axis == "horizontal" else ramp.unsqueeze(1).expand(h, w)
    return AlphaMask(data.contiguous())


def make_box_mask(resolution: tuple[int, int], box: tuple[int, int, int, int],
                  feather: int = 0) -> AlphaMask:
    """1 inside the half-open box (x0, y0, x1, y1), 0 outside, with a linear
    feather band of the given pixel width falling off outward."""
    h, w = int(resolution[0]), int(resolution[1])
    x0, y0, x1, y1 = (int(v) for v in box)
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise DomainError(f"degenerate or out-of-range box {box} for resolution {h}x{w}")
    if feather < 0:
        raise DomainError("feather must be non-negative")
    ys = torch.arange(h, dtype=torch.float32).unsqueeze(1)
    xs = torch.arange(w, dtype=torch.float32).unsqueeze(0)
    dx = torch.clamp(x0 - xs, min=0) + torch.clamp(xs - (x1 - 1), min=0)
    dy = torch.clamp(y0 - ys, min=0) + torch.clamp(ys - (y1 - 1), min=0)
    dist = torch.sqrt(dx * dx + dy * dy)
    if feather == 0:
        data = (dist == 0).float()
    else:
        data = (1.0 - dist / feather).clamp(0.0, 1.0)
    return AlphaMask(data)


def blend_exact(fa: torch.Tensor, fb: torch.Tensor, alpha: torch.Tensor) -> torch.Tensor:
    """Convex combination with bit-exact endpoints and a clamped interior."""
    mixed = ((1.0 - alpha) * fa + alpha * fb).clamp(torch.minimum(fa, fb), torch.maximum(fa, fb))
    return torch.where(alpha == 0.0, fa, torch.where(alpha == 1.0, fb, mixed))


def interpolate_features(fa: FeatureMap, fb: FeatureMap, mask: AlphaMask) -> FeatureMap:
    """Elementwise convex combination of two same-shaped feature maps."""
    if fa.data.shape != fb.data.shape:
        raise DomainError(f"feature shapes differ: {tuple(fa.data.shape)} vs {tuple(fb.data.shape)}")
    alpha = mask.at_resolution(fa.height, fa.width).reshape(1, 1, fa.height, fa.width)
    return FeatureMap(fa.layer_index, blend_exact(fa.data, fb.data, alpha))


def _shift_zero_fill(t: torch.Tensor, dy: int, dx: int) -> torch.Tensor:
    """Translate the last two dims, filling vacated cells with zero."""
    out = torch.zeros_like(t)
    h, w = t.shape[-2], t.shape[-1]
    ys = slice(max(dy, 0), h + min(dy, 0))
    xs = slice(max(dx, 0), w + min(dx, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    out[..., ys, xs] = t[..., ys_src, xs_src]
    return out


def shift_blend(f: FeatureMap, mask: AlphaMask, shift: ShiftSpec) -> FeatureMap:
    """Copy the masked feature patch to a translated location within one map.

    out = (1 - Shift(a)) * f + Shift(a) * Shift(f), with the shifted mask
    zero-filled outside its support: the map is untouched wherever the shifted
    mask is zero, and the patch under the mask lands at its offset verbatim.
    """
    dy, dx = shift.offset
    if abs(dy) >= f.height or abs(dx) >= f.width:
        raise DomainError(f"shift {shift.offset} out of range for {f.height}x{f.width} features")
    alpha = mask.at_resolution(f.height, f.width).reshape(1, 1, f.height, f.width)
    sa = _shift_zero_fill(alpha, dy, dx)
    sf = _shift_zero_fill(f.data, dy, dx)
    mixed = (1.0 - sa) * f.data + sa * sf
    out = torch.where(sa == 0.0, f.data, torch.where(sa == 1.0, sf, mixed))
    return FeatureMap(f.layer_index, out)


@torch.no_grad()
def _two_branch_render(step_a, step_b, rgb_a, rgb_b, num_layers: int, spec: BlendSpec,
                       out_resolution: tuple[int, int]) -> torch.Tensor:
    """Shared driver: two synchronized passes whose features are replaced by
    their interpolation at every layer in spec.layer_set, then an output-space
    blend of the branch images."""
    xa = xb = None
    for i in range(num_layers):
        na = step_a(i, xa)
        nb = step_b(i, xb)
        if i in spec.layer_set:
            alpha = spec.alpha_at(na.shape[2], na.shape[3]).reshape(1, 1, na.shape[2], na.shape[3])
            na = nb = blend_exact(na, nb, alpha)
        xa, xb = na, nb
    img_a = rgb_a(xa)
    img_b = rgb_b(xb)
    alpha = spec.alpha_at(*out_resolution).reshape(1, 1, *out_resolution)
    return blend_exact(img_a, img_b, alpha)[0]


def render_two_image_blend(gen: Generator, styles_a: StyleStack, styles_b: StyleStack,
                           spec: BlendSpec) -> torch.Tensor:
    """Blend two styles within one generator; mask 0 gives the pure A render,
    mask 1 the pure B render, bit for bit."""
    spec.validate_layers(gen.config.num_layers)
    ca = gen.styles_to_coeffs(styles_a) if isinstance(styles_a, StyleStack) else styles_a
    cb = gen.styles_to_coeffs(styles_b) if isinstance(styles_b, StyleStack) else styles_b

    def step(coeffs):
        def run(i, x):
            conv_style, _ = gen._split_sigma(coeffs, i)
            return gen.layer_forward(i, x if x is not None else gen.const, conv_style)
        return run

    def rgb(coeffs):
        def run(x):
            _, rgb_style = gen._split_sigma(coeffs, gen.config.num_layers - 1)
            return gen.rgb_forward(x, rgb_style)
        return run

    res = (gen.config.output_resolution, gen.config.output_resolution)
    return _two_branch_render(step(ca), step(cb), rgb(ca), rgb(cb),
                              gen.config.num_layers, spec, res)


def render_cross_generator_blend(gen_a: Generator, gen_b: Generator, styles: StyleStack,
                                 spec: BlendSpec) -> torch.Tensor:
    """Blend one style across two generators (branch A runs gen_a's layers,
    branch B gen_b's); a constant mask gives continuous translation, a box
    mask localized translation."""
    if gen_a.config.layout() != gen_b.config.layout():
        raise ConfigurationError("cross-generator blending requires identical generator layouts")
    spec.validate_layers(gen_a.config.num_layers)
    ca = gen_a.styles_to_coeffs(styles)
    cb = gen_b.styles_to_coeffs(styles)

    def step(gen, coeffs):
        def run(i, x):
            conv_style, _ = gen._split_sigma(coeffs, i)
            return gen.layer_forward(i, x if x is not None else gen.const, conv_style)
        return run

    def rgb(gen, coeffs):
        def run(x):
            _, rgb_style = gen._split_sigma(coeffs, gen.config.num_layers - 1)
            return gen.rgb_forward(x, rgb_style)
        return run

    res = (gen_a.config.output_resolution, gen_a.config.output_resolution)
    return _two_branch_render(step(gen_a, ca), step(gen_b, cb), rgb(gen_a, ca), rgb(gen_b, cb),
                              gen_a.config.num_layers, spec, res)
