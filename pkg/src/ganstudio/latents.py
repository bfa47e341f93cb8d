"""Latent-space utilities: sequence smoothing, sigma-space Gaussian statistics,
and pose alignment of style stacks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from .errors import DomainError
from .generator import Generator, StyleCoeffs, StyleStack

VARIANCE_FLOOR = 1e-6
IDENTITY_SIGMA = 1e-3


def _reflect_index(idx: int, n: int) -> int:
    # mirror without repeating the border sample (period 2n-2)
    if n == 1:
        return 0
    period = 2 * n - 2
    idx = idx % period
    return idx if idx < n else period - idx


def gaussian_kernel(sigma: float) -> torch.Tensor:
    """Truncated normalized Gaussian, radius ceil(3*sigma)."""
    radius = math.ceil(3.0 * sigma)
    k = torch.arange(-radius, radius + 1, dtype=torch.float64)
    kernel = torch.exp(-(k * k) / (2.0 * sigma * sigma))
    return (kernel / kernel.sum()).to(torch.float32)


def smooth_latents(seq: list[torch.Tensor], kernel_sigma: float) -> list[torch.Tensor]:
    """Gaussian-filter a sequence of style vectors along the sequence axis.

    Reflect boundary handling, so endpoints are not pulled toward zero.
    Sigmas below 1e-3 return the sequence unchanged.
    """
    if not seq:
        raise DomainError("cannot smooth an empty sequence")
    if kernel_sigma <= 0:
        raise DomainError(f"kernel_sigma must be positive, got {kernel_sigma}")
    vectors = [torch.as_tensor(v, dtype=torch.float32) for v in seq]
    if kernel_sigma < IDENTITY_SIGMA:
        return [v.clone() for v in vectors]
    stacked = torch.stack(vectors)
    n = stacked.shape[0]
    kernel = gaussian_kernel(kernel_sigma)
    radius = (kernel.shape[0] - 1) // 2
    # deviation form of the weighted sum (weights sum to 1): constant
    # sequences are fixed points bit for bit
    out = stacked.clone()
    for j in range(n):
        for t, weight in enumerate(kernel):
            out[j] += weight * (stacked[_reflect_index(j + t - radius, n)] - stacked[j])
    return [out[j] for j in range(n)]


@dataclass(frozen=True)
class SigmaGaussian:
    """Diagonal Gaussian fitted over the style-coefficient space."""

    mean: tuple[torch.Tensor, ...]
    variance: tuple[torch.Tensor, ...]
    sample_count: int

    def __post_init__(self):
        if len(self.mean) != len(self.variance):
            raise DomainError("mean and variance must have matching layer counts")
        for m, v in zip(self.mean, self.variance):
            if m.shape != v.shape:
                raise DomainError("mean and variance shapes differ")
            if (v <= 0).any():
                raise DomainError("variance must be strictly positive")

    def mean_coeffs(self) -> StyleCoeffs:
        return StyleCoeffs(tuple(m.clone() for m in self.mean))

    def to_arrays(self) -> dict[str, torch.Tensor]:
        arrays = {}
        for i, (m, v) in enumerate(zip(self.mean, self.variance)):
            arrays[f"sigma_gaussian.mean_{i}"] = m
            arrays[f"sigma_gaussian.variance_{i}"] = v
        arrays["sigma_gaussian.sample_count"] = torch.tensor([float(self.sample_count)])
        return arrays

    @classmethod
    def from_arrays(cls, arrays: dict[str, torch.Tensor]) -> "SigmaGaussian":
        count = len([k for k in arrays if k.startswith("sigma_gaussian.mean_")])
        if count == 0:
            raise DomainError("no sigma_gaussian arrays present")
        mean = tuple(arrays[f"sigma_gaussian.mean_{i}"] for i in range(count))
        var = tuple(arrays[f"sigma_gaussian.variance_{i}"] for i in range(count))
        n = int(arrays["sigma_gaussian.sample_count"].item())
        return cls(mean, var, n)


def fit_sigma_gaussian(gen: Generator, n_samples: int = 1024, seed: int = 0) -> SigmaGaussian:
    """Fit per-dimension moments of sigma = affine(map(z)) over seeded draws.

    Population variance, floored at 1e-6 so degenerate dimensions stay usable
    as prior scales.
    """
    if n_samples < 2:
        raise DomainError("need at least 2 samples to fit a Gaussian")
    g = torch.Generator().manual_seed(int(seed))
    z = torch.randn(n_samples, gen.config.latent_dim, generator=g)
    with torch.no_grad():
        w = gen.map_latent(z, truncation=1.0)
        mean, var = [], []
        for i in range(gen.config.num_layers):
            sig = gen.affines[i](w)
            mean.append(sig.mean(dim=0))
            var.append(sig.var(dim=0, unbiased=False).clamp_min(VARIANCE_FLOOR))
    return SigmaGaussian(tuple(mean), tuple(var), n_samples)


def gaussian_prior_loss(sigma: StyleCoeffs, g: SigmaGaussian) -> torch.Tensor:
    """Mean squared Mahalanobis distance per coefficient: zero at the mean,
    one at mean + sqrt(variance)."""
    if sigma.num_layers != len(g.mean):
        raise DomainError("coefficient layer count does not match the fitted Gaussian")
    total = None
    count = 0
    for v, m, var in zip(sigma.per_layer, g.mean, g.variance):
        if v.shape != m.shape:
            raise DomainError(f"coefficient width {tuple(v.shape)} does not match fit {tuple(m.shape)}")
        term = ((v - m) ** 2 / var).sum()
        total = term if total is None else total + term
        count += v.numel()
    return total / count


def pose_align(src: StyleStack, ref: StyleStack, k_dims: int) -> StyleStack:
    """Overwrite the first k_dims of src's flattened stack with ref's.

    Early dimensions of the stack steer pose and structure, so copying them
    from a reference aligns poses while leaving the remaining (appearance)
    dimensions untouched. Idempotent for a fixed ref.
    """
    if src.rows.shape != ref.rows.shape:
        raise DomainError("stacks must have identical shapes")
    total = src.rows.numel()
    if not 0 <= k_dims <= total:
        raise DomainError(f"k_dims {k_dims} out of range [0, {total}]")
    flat = src.rows.reshape(-1).clone()
    flat[:k_dims] = ref.rows.reshape(-1)[:k_dims]
    return StyleStack(flat.reshape(src.rows.shape))


def default_pose_dims(latent_dim: int) -> int:
    """Pose-controlling prefix: the first four rows of the stack."""
    return 4 * latent_dim
