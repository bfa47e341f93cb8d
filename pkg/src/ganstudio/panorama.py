"""Arbitrary-length panoramas knit from constrained two-image spans.

A span renders two images side by side with an overlap: the left image's
features occupy positions [0, W), the right image's start at a proportional
offset, and a linear ramp blends the two branches across the overlap at every
layer. Wherever the ramp is exactly 0 or 1 the span copies features (and
finally pixels) from the standalone narrow renders, computed once per latent.
Consecutive spans therefore agree bit-for-bit on the regions they share, and
cropped spans concatenate into a seamless panorama of any length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import torch

from .blending import AlphaMask, blend_exact
from .errors import ConfigurationError, DomainError, KnittingError
from .generator import FeatureMap, Generator, HookSet, StyleStack, expand_to_stack
from .latents import smooth_latents
from .spatial import PadSpec, pad_features

DIRECTIONS = ("horizontal", "vertical")
DEFAULT_OVERLAP = 0.5


@dataclass(frozen=True)
class SpanGeometry:
    """Resolved span layout in output pixels along the blend axis."""

    width: int          # single-image extent W
    offset: int         # where the right image starts; ramp spans [offset, W]
    span_width: int     # W + offset
    constrained_left: tuple[int, int]
    constrained_right: tuple[int, int]
    direction: str = "horizontal"

    @property
    def horizontal(self) -> bool:
        return self.direction == "horizontal"


@dataclass(frozen=True)
class SpanPlan:
    """Two styles plus the constrained-overlap construction joining them."""

    left_styles: StyleStack
    right_styles: StyleStack
    overlap_frac: float = DEFAULT_OVERLAP
    constrained_left: tuple[int, int] | None = None
    constrained_right: tuple[int, int] | None = None
    direction: str = "horizontal"


def resolve_geometry(gen: Generator, overlap_frac: float,
                     constrained_left=None, constrained_right=None,
                     direction: str = "horizontal") -> SpanGeometry:
    """Snap the overlap to layer-aligned pixels and validate the constrained ranges.

    The offset must be a multiple of 2**num_upsamples so every layer sees an
    integer placement; the default constrained blocks are the outer thirds of
    each image's extent.
    """
    if direction not in DIRECTIONS:
        raise DomainError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if not 0.0 < overlap_frac < 1.0:
        raise DomainError(f"overlap_frac must lie in (0,1), got {overlap_frac}")
    w = gen.config.output_resolution
    snap = 2 ** gen.config.num_upsamples
    offset = round(w * (1.0 - overlap_frac) / snap) * snap
    offset = min(max(offset, snap), w - snap)
    span_width = w + offset
    # default constrained blocks: the outer thirds, shrunk to the pure zones
    # when the overlap eats into them
    third = w // 3
    cl = tuple(constrained_left) if constrained_left is not None else (0, min(third, offset + 1))
    cr = tuple(constrained_right) if constrained_right is not None else (max(span_width - third, w), span_width)
    if not (0 <= cl[0] < cl[1] <= span_width and 0 <= cr[0] < cr[1] <= span_width):
        raise DomainError(f"constrained ranges {cl}, {cr} out of bounds for span width {span_width}")
    if cl[1] > cr[0]:
        raise DomainError("constrained ranges must be disjoint and ordered left, right")
    # the ramp occupies (offset, w); constrained ranges must not touch it
    if cl[1] - 1 > offset or cr[0] < w:
        raise DomainError(
            f"ramp over [{offset},{w}] overlaps a constrained range ({cl}, {cr})")
    return SpanGeometry(w, offset, span_width, cl, cr, direction)


# --------------------------------------------------------------- axis helpers

def _pad_after(f: FeatureMap, amount: int, horizontal: bool) -> torch.Tensor:
    spec = PadSpec("replicate", (0, amount, 0, 0) if horizontal else (0, 0, 0, amount))
    return pad_features(f, spec).data


def _pad_before(f: FeatureMap, amount: int, horizontal: bool) -> torch.Tensor:
    spec = PadSpec("replicate", (amount, 0, 0, 0) if horizontal else (0, 0, amount, 0))
    return pad_features(f, spec).data


def _ramp(offset: int, width: int, span: int, other: int, horizontal: bool) -> torch.Tensor:
    pos = torch.arange(span, dtype=torch.float32)
    a = ((pos - offset) / float(width - offset)).clamp(0.0, 1.0)
    if horizontal:
        return a.reshape(1, 1, 1, span).expand(1, 1, other, span)
    return a.reshape(1, 1, span, 1).expand(1, 1, span, other)


def _axis_slice(t: torch.Tensor, a: int, b: int, horizontal: bool) -> torch.Tensor:
    return t[..., :, a:b] if horizontal else t[..., a:b, :]


# ------------------------------------------------------------------ span pass

def _capture_all(gen: Generator, styles: StyleStack):
    img, caps = gen.synthesize(styles, HookSet(capture="all"))
    return img, caps


@torch.no_grad()
def _span_pass(gen: Generator, geom: SpanGeometry,
               coeffs_a, coeffs_b, caps_a, caps_b, img_a, img_b,
               mask_override: AlphaMask | None) -> torch.Tensor:
    """Run the wide two-branch pass with per-layer endpoint copies."""
    cfg = gen.config
    horizontal = geom.horizontal
    w_out = cfg.output_resolution
    single = coeffs_b is None

    def alpha_at(other: int, offset_i: int, width_i: int, span_i: int) -> torch.Tensor:
        if mask_override is not None:
            h, w = (other, span_i) if horizontal else (span_i, other)
            return mask_override.at_resolution(h, w).reshape(1, 1, h, w)
        return _ramp(offset_i, width_i, span_i, other, horizontal)

    def constrain(wide: torch.Tensor, alpha: torch.Tensor,
                  narrow_a: FeatureMap | None, narrow_b: FeatureMap | None,
                  offset_i: int) -> torch.Tensor:
        ext_a = _pad_after(narrow_a, offset_i, horizontal)
        ext_b = _pad_before(narrow_a if single else narrow_b, offset_i, horizontal)
        return torch.where(alpha == 0.0, ext_a, torch.where(alpha == 1.0, ext_b, wide))

    # assemble the wide input for layer 0 from the (shared) constant block
    base = cfg.base_resolution
    off0 = geom.offset * base // w_out
    const = FeatureMap(0, gen.const)
    alpha_in = alpha_at(base, off0, base, base + off0)
    g = blend_exact(_pad_after(const, off0, horizontal), _pad_before(const, off0, horizontal), alpha_in)

    for i in range(cfg.num_layers):
        width_i = cfg.layer_resolution(i)
        offset_i = geom.offset * width_i // w_out
        span_i = width_i + offset_i
        conv_a, _ = gen._split_sigma(coeffs_a, i)
        xa = gen.layer_forward(i, g, conv_a)
        if single:
            wide = xa
        else:
            conv_b, _ = gen._split_sigma(coeffs_b, i)
            xb = gen.layer_forward(i, g, conv_b)
            alpha = alpha_at(width_i, offset_i, width_i, span_i)
            wide = blend_exact(xa, xb, alpha)
        alpha = alpha_at(width_i, offset_i, width_i, span_i)
        g = constrain(wide, alpha, caps_a[i], None if single else caps_b[i], offset_i)

    _, rgb_a = gen._split_sigma(coeffs_a, cfg.num_layers - 1)
    out = gen.rgb_forward(g, rgb_a)
    if not single:
        _, rgb_b = gen._split_sigma(coeffs_b, cfg.num_layers - 1)
        alpha = alpha_at(w_out, geom.offset, w_out, geom.span_width)
        out = blend_exact(out, gen.rgb_forward(g, rgb_b), alpha)
    alpha = alpha_at(w_out, geom.offset, w_out, geom.span_width)
    out = constrain(out, alpha, FeatureMap(0, img_a.unsqueeze(0)),
                    None if single else FeatureMap(0, img_b.unsqueeze(0)), geom.offset)
    return out[0]


def build_span(gen: Generator, plan: SpanPlan,
               mask_override: AlphaMask | None = None) -> torch.Tensor:
    """Render one constrained span; constrained ranges reproduce the pure
    narrow renders bit-exactly."""
    geom = resolve_geometry(gen, plan.overlap_frac, plan.constrained_left,
                            plan.constrained_right, plan.direction)
    ca = gen.styles_to_coeffs(plan.left_styles)
    cb = gen.styles_to_coeffs(plan.right_styles)
    img_a, caps_a = _capture_all(gen, plan.left_styles)
    img_b, caps_b = _capture_all(gen, plan.right_styles)
    return _span_pass(gen, geom, ca, cb, caps_a, caps_b, img_a, img_b, mask_override)


def wide_render(gen: Generator, styles: StyleStack, plan: SpanPlan | None = None,
                mask_override: AlphaMask | None = None) -> torch.Tensor:
    """Single-style render on the span canvas: the degenerate span whose blend
    step vanishes. build_span with equal styles matches this bit for bit."""
    plan = plan or SpanPlan(styles, styles)
    geom = resolve_geometry(gen, plan.overlap_frac, plan.constrained_left,
                            plan.constrained_right, plan.direction)
    coeffs = gen.styles_to_coeffs(styles)
    img, caps = _capture_all(gen, styles)
    return _span_pass(gen, geom, coeffs, None, caps, None, img, None, mask_override)


# ------------------------------------------------------------------ panoramas

@dataclass
class PanoramaPlan:
    """Everything needed to reproduce a panorama: the latent sequence, the
    span geometry, the crop ranges whose concatenation forms the image, and
    the smoothing applied to the latents before rendering."""

    latents: list[torch.Tensor]
    span_width: int
    crop_ranges: list[tuple[int, int]]
    smoothing_sigma: float = 0.0
    overlap_frac: float = DEFAULT_OVERLAP
    direction: str = "horizontal"

    def total_width(self) -> int:
        return sum(b - a for a, b in self.crop_ranges)

    def to_json_dict(self) -> dict:
        return {
            "latents": [v.tolist() for v in self.latents],
            "span_width": self.span_width,
            "crop_ranges": [list(r) for r in self.crop_ranges],
            "smoothing_sigma": self.smoothing_sigma,
            "overlap_frac": self.overlap_frac,
            "direction": self.direction,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "PanoramaPlan":
        return cls(
            latents=[torch.tensor(v, dtype=torch.float32) for v in d["latents"]],
            span_width=int(d["span_width"]),
            crop_ranges=[(int(a), int(b)) for a, b in d["crop_ranges"]],
            smoothing_sigma=float(d.get("smoothing_sigma", 0.0)),
            overlap_frac=float(d.get("overlap_frac", DEFAULT_OVERLAP)),
            direction=d.get("direction", "horizontal"),
        )


def default_panorama_plan(gen: Generator, latents: list[torch.Tensor],
                          smoothing_sigma: float = 0.0,
                          overlap_frac: float = DEFAULT_OVERLAP,
                          direction: str = "horizontal") -> PanoramaPlan:
    """Crop scheme: the first span contributes [0, W), middle spans
    [W-offset, W), and the last span [W-offset, span_width)."""
    if len(latents) < 2:
        raise DomainError("a panorama needs at least 2 latents")
    geom = resolve_geometry(gen, overlap_frac, direction=direction)
    w, off, s = geom.width, geom.offset, geom.span_width
    if off < w - off:
        raise ConfigurationError(
            f"overlap_frac {overlap_frac} too large to knit: adjacent ramps would overlap")
    n_spans = len(latents) - 1
    if n_spans == 1:
        crops = [(0, s)]
    else:
        crops = [(0, w)] + [(w - off, w)] * (n_spans - 2) + [(w - off, s)]
    return PanoramaPlan(latents=[torch.as_tensor(v, dtype=torch.float32) for v in latents],
                        span_width=s, crop_ranges=crops,
                        smoothing_sigma=smoothing_sigma,
                        overlap_frac=overlap_frac, direction=direction)


def _verify_constrained(span_img: torch.Tensor, geom: SpanGeometry,
                        img_left: torch.Tensor, img_right: torch.Tensor,
                        span_index: int) -> None:
    horizontal = geom.horizontal
    a, b = geom.constrained_left
    got = _axis_slice(span_img, a, b, horizontal)
    want = _axis_slice(img_left, a, b, horizontal)
    if not torch.equal(got, want):
        raise KnittingError(
            f"span {span_index}: constrained left range {geom.constrained_left} deviates "
            f"from the pure render", float((got - want).abs().max()), span_index)
    a, b = geom.constrained_right
    got = _axis_slice(span_img, a, b, horizontal)
    want = _axis_slice(img_right, a - geom.offset, b - geom.offset, horizontal)
    if not torch.equal(got, want):
        raise KnittingError(
            f"span {span_index}: constrained right range {geom.constrained_right} deviates "
            f"from the pure render", float((got - want).abs().max()), span_index)


def knit_panorama(gen: Generator, plan: PanoramaPlan) -> torch.Tensor:
    """Build all spans from shared per-latent renders, verify the constrained
    regions and crop-boundary continuations, then concatenate the crops."""
    if len(plan.latents) < 2:
        raise DomainError("a panorama needs at least 2 latents")
    if len(plan.crop_ranges) != len(plan.latents) - 1:
        raise DomainError("need exactly one crop range per span")
    geom = resolve_geometry(gen, plan.overlap_frac, direction=plan.direction)
    if plan.span_width != geom.span_width:
        raise DomainError(f"plan span_width {plan.span_width} does not match geometry {geom.span_width}")
    for a, b in plan.crop_ranges:
        if not 0 <= a < b <= geom.span_width:
            raise DomainError(f"crop range ({a},{b}) out of bounds for span width {geom.span_width}")

    latents = plan.latents
    if plan.smoothing_sigma > 0:
        latents = smooth_latents(latents, plan.smoothing_sigma)
    stacks = [expand_to_stack(v, gen.config.num_layers) for v in latents]
    coeffs = [gen.styles_to_coeffs(s) for s in stacks]
    rendered = [_capture_all(gen, s) for s in stacks]

    spans = []
    for k in range(len(stacks) - 1):
        span = _span_pass(gen, geom, coeffs[k], coeffs[k + 1],
                          rendered[k][1], rendered[k + 1][1],
                          rendered[k][0], rendered[k + 1][0], None)
        _verify_constrained(span, geom, rendered[k][0], rendered[k + 1][0], k)
        spans.append(span)

    # crop-boundary continuation: the first column a span contributes must
    # equal the column at which the previous span stopped
    horizontal = geom.horizontal
    for k in range(len(spans) - 1):
        cont = _axis_slice(spans[k], plan.crop_ranges[k][1], plan.crop_ranges[k][1] + 1, horizontal)
        head = _axis_slice(spans[k + 1], plan.crop_ranges[k + 1][0], plan.crop_ranges[k + 1][0] + 1, horizontal)
        if not torch.equal(cont, head):
            raise KnittingError(
                f"spans {k} and {k + 1} disagree at the crop boundary",
                float((cont - head).abs().max()), k)

    pieces = [_axis_slice(spans[k], a, b, horizontal) for k, (a, b) in enumerate(plan.crop_ranges)]
    return torch.cat(pieces, dim=-1 if horizontal else -2)


def generate_panorama(gen: Generator, n: int, seed: int, smoothing_sigma: float = 0.0,
                      overlap_frac: float = DEFAULT_OVERLAP,
                      direction: str = "horizontal") -> torch.Tensor:
    """Sample n latents, build the default plan, and knit."""
    if n < 2:
        raise DomainError("a panorama needs at least 2 latents")
    latents = gen.sample_styles(n, seed)
    plan = default_panorama_plan(gen, latents, smoothing_sigma, overlap_frac, direction)
    return knit_panorama(gen, plan)


def seeded_panorama_plan(gen: Generator, n: int, seed: int, smoothing_sigma: float = 0.0,
                         overlap_frac: float = DEFAULT_OVERLAP,
                         direction: str = "horizontal") -> PanoramaPlan:
    """The plan generate_panorama would use, for serialization."""
    latents = gen.sample_styles(n, seed)
    return default_panorama_plan(gen, latents, smoothing_sigma, overlap_frac, direction)
