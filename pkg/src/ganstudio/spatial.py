"""Spatial edits of intermediate features: border padding and resizing.

Applied to a captured feature map and injected back, these reshape the output
image the same way because the synthesis stack is fully convolutional.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import torch
import torch.nn.functional as F

from .errors import DomainError
from .generator import FeatureMap

PAD_MODES = ("replicate", "reflect", "circular", "zero")
RESIZE_METHODS = ("nearest", "bilinear")


@dataclass(frozen=True)
class PadSpec:
    """Border padding; amounts are (left, right, top, bottom) feature pixels."""

    mode: str
    amounts: tuple[int, int, int, int]

    def __post_init__(self):
        if self.mode not in PAD_MODES:
            raise DomainError(f"unknown pad mode {self.mode!r}, expected one of {PAD_MODES}")
        amounts = tuple(int(a) for a in self.amounts)
        if len(amounts) != 4 or any(a < 0 for a in amounts):
            raise DomainError("pad amounts must be four non-negative integers (left, right, top, bottom)")
        object.__setattr__(self, "amounts", amounts)


@dataclass(frozen=True)
class ResizeSpec:
    """Resize to an explicit (H, W) target or by a positive scale factor."""

    scale: float | Fraction | None = None
    target: tuple[int, int] | None = None
    method: str = "bilinear"

    def __post_init__(self):
        if self.method not in RESIZE_METHODS:
            raise DomainError(f"unknown resize method {self.method!r}, expected one of {RESIZE_METHODS}")
        if (self.scale is None) == (self.target is None):
            raise DomainError("exactly one of scale or target must be given")
        if self.scale is not None and not self.scale > 0:
            raise DomainError("scale must be positive")
        if self.target is not None:
            target = (int(self.target[0]), int(self.target[1]))
            if target[0] < 1 or target[1] < 1:
                raise DomainError("target dims must be >= 1")
            object.__setattr__(self, "target", target)

    def resolve(self, height: int, width: int) -> tuple[int, int]:
        if self.target is not None:
            return self.target
        h = int(height * Fraction(self.scale))
        w = int(width * Fraction(self.scale))
        if h < 1 or w < 1:
            raise DomainError(f"scale {self.scale} collapses {height}x{width} to a zero dim")
        return h, w


def pad_features(f: FeatureMap, spec: PadSpec) -> FeatureMap:
    """Pad the borders; the interior stays bit-identical to the input.

    Reflect mirrors without repeating the border pixel and so requires every
    amount to be smaller than the corresponding input dimension; circular
    wraps and allows amounts up to the dimension.
    """
    left, right, top, bottom = spec.amounts
    h, w = f.height, f.width
    if spec.mode == "reflect" and (left >= w or right >= w or top >= h or bottom >= h):
        raise DomainError(f"reflect padding {spec.amounts} must be < dims ({h}x{w})")
    if spec.mode == "circular" and (left > w or right > w or top > h or bottom > h):
        raise DomainError(f"circular padding {spec.amounts} must be <= dims ({h}x{w})")
    if all(a == 0 for a in spec.amounts):
        return FeatureMap(f.layer_index, f.data)
    pad = (left, right, top, bottom)
    if spec.mode == "zero":
        out = F.pad(f.data, pad, mode="constant", value=0.0)
    else:
        out = F.pad(f.data, pad, mode=spec.mode)
    return FeatureMap(f.layer_index, out)


def resize_features(f: FeatureMap, spec: ResizeSpec) -> FeatureMap:
    """Resample the spatial dims; nearest replicates indices, bilinear uses
    the align-corners=false convention."""
    target = spec.resolve(f.height, f.width)
    if target == (f.height, f.width) and spec.method == "nearest":
        return FeatureMap(f.layer_index, f.data)
    if spec.method == "nearest":
        out = F.interpolate(f.data, size=target, mode="nearest")
    else:
        if target == (f.height, f.width):
            return FeatureMap(f.layer_index, f.data)
        out = F.interpolate(f.data, size=target, mode="bilinear", align_corners=False)
    return FeatureMap(f.layer_index, out)
