"""Gradient-descent reconstruction of a target image in style-coefficient space.

The optimization variable is the per-layer coefficient set directly, started
at the fitted Gaussian mean and regularized toward it. The perceptual term is
pluggable; the built-in default is a downsampling-pyramid MSE so nothing here
needs pretrained weights.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import torch
import torch.nn.functional as F

from .errors import ConfigurationError, DomainError, InversionDiverged
from .generator import Generator, StyleCoeffs
from .latents import SigmaGaussian, gaussian_prior_loss

PYRAMID_OCTAVES = 3


def mse_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.shape != b.shape:
        raise DomainError(f"image shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")
    return ((a - b) ** 2).mean()


class PerceptualLossProvider(Protocol):
    def __call__(self, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor: ...


def pyramid_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Mean of per-level MSEs over the original plus up to three 2x
    average-pool octaves (stopping once a dim would fall below one pixel)."""
    if a.shape != b.shape:
        raise DomainError(f"image shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")
    xa, xb = a.unsqueeze(0), b.unsqueeze(0)
    losses = [((xa - xb) ** 2).mean()]
    for _ in range(PYRAMID_OCTAVES):
        if min(xa.shape[-2], xa.shape[-1]) < 2:
            break
        xa = F.avg_pool2d(xa, 2)
        xb = F.avg_pool2d(xb, 2)
        losses.append(((xa - xb) ** 2).mean())
    return sum(losses) / len(losses)


_PROVIDERS: dict[str, PerceptualLossProvider] = {"pyramid": pyramid_loss}


def register_perceptual_provider(name: str, provider: PerceptualLossProvider) -> None:
    _PROVIDERS[name] = provider


def get_perceptual_provider(name: str) -> PerceptualLossProvider:
    try:
        return _PROVIDERS[name]
    except KeyError:
        raise ConfigurationError(
            f"no perceptual loss provider named {name!r}; registered: {sorted(_PROVIDERS)}") from None


@dataclass(frozen=True)
class InversionConfig:
    steps: int = 3000
    step_size: float = 0.01
    prior_weight: float = 0.1
    perceptual_weight: float = 1.0
    mse_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigurationError("steps must be positive")
        if self.step_size <= 0:
            raise ConfigurationError("step_size must be positive")
        if min(self.prior_weight, self.perceptual_weight, self.mse_weight) < 0:
            raise ConfigurationError("loss weights must be non-negative")
        if self.prior_weight == self.perceptual_weight == self.mse_weight == 0:
            raise ConfigurationError("at least one loss weight must be positive")


@dataclass
class InversionResult:
    sigma: StyleCoeffs
    loss_trace: list[tuple[int, float, float, float, float]] = field(default_factory=list)
    final_image: torch.Tensor | None = None

    def best_total(self) -> float:
        return min(t[1] for t in self.loss_trace)


def total_loss(gen: Generator, sigma: StyleCoeffs, target: torch.Tensor, g: SigmaGaussian,
               cfg: InversionConfig, perceptual: PerceptualLossProvider):
    """Weighted objective and its components for one coefficient set."""
    img, _ = gen.synthesize(sigma)
    mse = mse_loss(img, target)
    perc = perceptual(img, target) if cfg.perceptual_weight > 0 else torch.zeros((), dtype=img.dtype)
    prior = gaussian_prior_loss(sigma, g)
    total = cfg.mse_weight * mse + cfg.perceptual_weight * perc + cfg.prior_weight * prior
    return total, mse, perc, prior


def invert(gen: Generator, target: torch.Tensor, g: SigmaGaussian,
           cfg: InversionConfig | None = None,
           perceptual: PerceptualLossProvider | str = "pyramid",
           progress: Callable[[int, float], None] | None = None) -> InversionResult:
    """Adaptive-moment descent on the style coefficients with cosine step decay.

    Returns the best-by-total-loss coefficients over the whole trace; the
    trace has steps+1 entries (the initial point plus one per update).
    """
    cfg = cfg or InversionConfig()
    if isinstance(perceptual, str):
        perceptual = get_perceptual_provider(perceptual)
    res = gen.config.output_resolution
    if tuple(target.shape) != (3, res, res):
        raise DomainError(f"target shape {tuple(target.shape)} does not match generator output 3x{res}x{res}")
    target = torch.as_tensor(target, dtype=gen.w_mean.dtype)

    params = [m.detach().clone().to(gen.w_mean.dtype).requires_grad_(True) for m in g.mean]
    opt = torch.optim.Adam(params, lr=cfg.step_size)
    sched = torch.optim.lr_scheduler.LambdaLR(
        opt, lambda t: 0.5 * (1.0 + math.cos(math.pi * t / max(cfg.steps, 1))))

    trace: list[tuple[int, float, float, float, float]] = []
    best_total = math.inf
    best_sigma = StyleCoeffs(tuple(p.detach().clone() for p in params))

    def record(step: int, parts) -> None:
        nonlocal best_total, best_sigma
        vals = [float(p.detach() if isinstance(p, torch.Tensor) else p) for p in parts]
        total = vals[0]
        if not math.isfinite(total):
            raise InversionDiverged(f"non-finite loss at step {step}", trace)
        trace.append((step, total, vals[1], vals[2], vals[3]))
        if total < best_total:
            best_total = total
            best_sigma = StyleCoeffs(tuple(p.detach().clone() for p in params))
        if progress is not None:
            progress(step, total)

    for step in range(cfg.steps):
        opt.zero_grad()
        parts = total_loss(gen, StyleCoeffs(tuple(params)), target, g, cfg, perceptual)
        record(step, parts)
        parts[0].backward()
        opt.step()
        sched.step()
    with torch.no_grad():
        parts = total_loss(gen, StyleCoeffs(tuple(params)), target, g, cfg, perceptual)
    record(cfg.steps, parts)

    with torch.no_grad():
        final_image, _ = gen.synthesize(best_sigma)
    return InversionResult(sigma=best_sigma, loss_trace=trace, final_image=final_image)


def trace_to_csv(trace: list[tuple[int, float, float, float, float]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "total", "mse", "perceptual", "prior"])
        writer.writerows(trace)


def trace_csv_bytes(trace: list[tuple[int, float, float, float, float]]) -> bytes:
    lines = ["step,total,mse,perceptual,prior"]
    lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in row) for row in trace]
    return ("\n".join(lines) + "\n").encode()
