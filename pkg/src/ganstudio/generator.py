"""Deterministic style-based generator with per-layer capture/injection hooks.

The synthesis network is a stack of modulated 3x3 convolutions with bilinear
upsampling at configured layers, driven by per-layer style coefficients that an
affine transform produces from intermediate latent vectors. Every layer output
can be captured, edited, or replaced mid-synthesis, and injected features may
change spatial size: the network is fully convolutional, so the output image
scales along with them.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigurationError, DomainError, InjectionError

DEMOD_EPS = 1e-8
RGB_GAIN = 8.0  # pre-tanh gain; spreads random-init output over [-1,1] without saturating
_MEAN_STYLE_SAMPLES = 512


def _default_upsamples(num_layers: int) -> tuple[int, ...]:
    # two conv layers per resolution: upsample before every even layer >= 2
    return tuple(i for i in range(2, num_layers) if i % 2 == 0)


@dataclass(frozen=True)
class GeneratorConfig:
    """Immutable layout of the generator.

    Output resolution is base_resolution * 2**len(upsample_layers); every
    layer runs at a power-of-two multiple of base_resolution.
    """

    latent_dim: int = 64
    num_layers: int = 8
    base_resolution: int = 4
    channels_per_layer: tuple[int, ...] = (64, 64, 64, 64, 32, 32, 16, 16)
    rng_seed: int = 0
    upsample_layers: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.latent_dim < 1 or self.num_layers < 1:
            raise ConfigurationError("latent_dim and num_layers must be positive")
        if self.base_resolution < 1 or self.base_resolution & (self.base_resolution - 1):
            raise ConfigurationError(
                f"base_resolution must be a positive power of two, got {self.base_resolution}"
            )
        channels = tuple(int(c) for c in self.channels_per_layer)
        if len(channels) != self.num_layers:
            raise ConfigurationError(
                f"channels_per_layer has {len(channels)} entries for {self.num_layers} layers"
            )
        if any(c < 1 for c in channels):
            raise ConfigurationError("channel counts must be positive")
        object.__setattr__(self, "channels_per_layer", channels)
        ups = self.upsample_layers
        ups = _default_upsamples(self.num_layers) if ups is None else tuple(sorted(set(int(i) for i in ups)))
        if any(i < 1 or i >= self.num_layers for i in ups):
            raise ConfigurationError("upsample layer indices must lie in [1, num_layers)")
        object.__setattr__(self, "upsample_layers", ups)
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ConfigurationError("rng_seed must be a 64-bit unsigned integer")

    def layout(self) -> tuple:
        """Architecture identity, ignoring the init seed; two generators are
        weight-compatible (swap, cross-generator blending) iff layouts match."""
        return (self.latent_dim, self.num_layers, self.base_resolution,
                self.channels_per_layer, self.upsample_layers)

    @property
    def num_upsamples(self) -> int:
        return len(self.upsample_layers)

    @property
    def output_resolution(self) -> int:
        return self.base_resolution * 2**self.num_upsamples

    def layer_resolution(self, i: int) -> int:
        return self.base_resolution * 2 ** sum(1 for u in self.upsample_layers if u <= i)

    def in_channels(self, i: int) -> int:
        return self.channels_per_layer[i - 1] if i > 0 else self.channels_per_layer[0]

    def out_channels(self, i: int) -> int:
        return self.channels_per_layer[i]

    def sigma_width(self, i: int) -> int:
        # the last layer's coefficients also carry the style of the RGB head
        width = self.in_channels(i)
        if i == self.num_layers - 1:
            width += self.channels_per_layer[-1]
        return width

    def to_json_dict(self) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "num_layers": self.num_layers,
            "base_resolution": self.base_resolution,
            "channels_per_layer": list(self.channels_per_layer),
            "rng_seed": self.rng_seed,
            "upsample_layers": list(self.upsample_layers),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(
            latent_dim=int(d["latent_dim"]),
            num_layers=int(d["num_layers"]),
            base_resolution=int(d["base_resolution"]),
            channels_per_layer=tuple(d["channels_per_layer"]),
            rng_seed=int(d["rng_seed"]),
            upsample_layers=tuple(d["upsample_layers"]) if d.get("upsample_layers") is not None else None,
        )


class StyleStack:
    """One style vector per synthesis layer (a point in the extended style space).

    A stack whose rows are all equal is "in-W": it came from broadcasting a
    single style vector and no row has been edited since.
    """

    def __init__(self, rows: torch.Tensor):
        rows = torch.as_tensor(rows, dtype=torch.float32)
        if rows.ndim != 2:
            raise DomainError(f"style stack must be 2-D (layers x latent_dim), got shape {tuple(rows.shape)}")
        if not torch.isfinite(rows).all():
            raise DomainError("style stack contains non-finite entries")
        self.rows = rows

    @classmethod
    def from_vector(cls, w: torch.Tensor, num_layers: int) -> "StyleStack":
        w = torch.as_tensor(w, dtype=torch.float32).reshape(-1)
        return cls(w.unsqueeze(0).repeat(num_layers, 1))

    @property
    def num_layers(self) -> int:
        return self.rows.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.rows.shape[1]

    @property
    def is_in_w(self) -> bool:
        return bool((self.rows == self.rows[0]).all())

    def with_row(self, i: int, w: torch.Tensor) -> "StyleStack":
        rows = self.rows.clone()
        rows[i] = torch.as_tensor(w, dtype=torch.float32)
        return StyleStack(rows)

    def clone(self) -> "StyleStack":
        return StyleStack(self.rows.clone())


def expand_to_stack(w: torch.Tensor, num_layers: int) -> StyleStack:
    """Broadcast a single style vector to a per-layer stack (flagged in-W)."""
    return StyleStack.from_vector(w, num_layers)


class StyleCoeffs:
    """Per-layer style coefficients, the immediate inputs to modulation.

    Layer i holds a vector sized config.sigma_width(i): the modulation weights
    of that layer's convolution, plus the RGB head's weights on the last layer.
    """

    def __init__(self, per_layer: Iterable[torch.Tensor]):
        self.per_layer = tuple(torch.as_tensor(v) for v in per_layer)
        for v in self.per_layer:
            if v.ndim != 1:
                raise DomainError("style coefficients must be 1-D per layer")
            if not torch.isfinite(v).all():
                raise DomainError("style coefficients contain non-finite entries")

    @property
    def num_layers(self) -> int:
        return len(self.per_layer)

    def widths(self) -> tuple[int, ...]:
        return tuple(v.shape[0] for v in self.per_layer)

    def detached(self) -> "StyleCoeffs":
        return StyleCoeffs(tuple(v.detach().clone() for v in self.per_layer))


@dataclass
class FeatureMap:
    """An intermediate activation tagged with the layer that produced it."""

    layer_index: int
    data: torch.Tensor  # B x C x H x W

    def __post_init__(self):
        self.data = torch.as_tensor(self.data)
        if self.data.ndim != 4:
            raise DomainError(f"feature map must be B x C x H x W, got shape {tuple(self.data.shape)}")

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]


@dataclass
class HookSet:
    """Capture / edit / inject points for one synthesis pass.

    capture: layer indices whose features to record, or "all".
    edit: per-layer transforms applied to f_i in order before layer i+1 runs.
    inject: per-layer replacements applied after edits.
    Captured features are the values actually passed downstream (post edit and
    injection); re-injecting a captured map unchanged reproduces the pass.
    """

    capture: Iterable[int] | str = ()
    inject: Mapping[int, FeatureMap | torch.Tensor] = field(default_factory=dict)
    edit: Mapping[int, Iterable[Callable[[FeatureMap], FeatureMap]]] = field(default_factory=dict)

    def capture_set(self, num_layers: int) -> frozenset:
        if self.capture == "all":
            return frozenset(range(num_layers))
        return frozenset(int(i) for i in self.capture)

    def layer_indices(self) -> frozenset:
        idx = set() if self.capture == "all" else set(int(i) for i in self.capture)
        idx |= set(int(i) for i in self.inject)
        idx |= set(int(i) for i in self.edit)
        return frozenset(idx)


class _SynthLayer(nn.Module):
    """Modulated 3x3 convolution with optional 2x upsampling and fixed noise."""

    def __init__(self, in_ch: int, out_ch: int, upsample: bool):
        super().__init__()
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.upsample = upsample
        self.conv_weight = nn.Parameter(torch.empty(out_ch, in_ch, 3, 3))
        self.bias = nn.Parameter(torch.empty(out_ch))
        self.noise_strength = nn.Parameter(torch.empty(()))


def modulated_conv2d(x, weight, style, demodulate=True, padding=1):
    """StyleGAN2-style modulated convolution; batch size may exceed one.

    Demodulation coefficients depend only on the modulated weights, never on
    x, so the operation stays a plain (spatially local) convolution.
    """
    b, in_ch, h, w = x.shape
    out_ch = weight.shape[0]
    if style.ndim == 1:
        style = style.unsqueeze(0).expand(b, -1)
    wmod = weight.unsqueeze(0) * style.reshape(b, 1, in_ch, 1, 1)
    if demodulate:
        d = torch.rsqrt(wmod.pow(2).sum(dim=(2, 3, 4)) + DEMOD_EPS)
        wmod = wmod * d.reshape(b, out_ch, 1, 1, 1)
    y = F.conv2d(x.reshape(1, b * in_ch, h, w), wmod.reshape(b * out_ch, in_ch, *weight.shape[2:]),
                 padding=padding, groups=b)
    return y.reshape(b, out_ch, y.shape[2], y.shape[3])


class Generator(nn.Module):
    """Deterministic toy style generator.

    Treated as immutable after construction: concurrent synthesis is safe, and
    anything that trains parameters must operate on an exclusive clone.

    Parameter-to-layer assignment (used by swap_weights and finetuning):
    mapping.* / const / w_mean belong to layer 0, affines.{i}.* and
    layers.{i}.* (plus the noise_{i} buffer) to layer i, and the RGB head to
    the last layer.
    """

    FORMAT_VERSION = 1

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        c = config
        self.mapping = nn.ModuleList([
            nn.Linear(c.latent_dim, c.latent_dim),
            nn.Linear(c.latent_dim, c.latent_dim),
        ])
        self.affines = nn.ModuleList([
            nn.Linear(c.latent_dim, c.sigma_width(i)) for i in range(c.num_layers)
        ])
        self.layers = nn.ModuleList([
            _SynthLayer(c.in_channels(i), c.out_channels(i), i in c.upsample_layers)
            for i in range(c.num_layers)
        ])
        self.const = nn.Parameter(torch.empty(1, c.channels_per_layer[0], c.base_resolution, c.base_resolution))
        self.rgb_weight = nn.Parameter(torch.empty(3, c.channels_per_layer[-1], 1, 1))
        self.rgb_bias = nn.Parameter(torch.empty(3))
        for i in range(c.num_layers):
            r = c.layer_resolution(i)
            self.register_buffer(f"noise_{i}", torch.empty(1, 1, r, r))
        self.register_buffer("w_mean", torch.empty(c.latent_dim))
        self._init_parameters()

    # ---------------------------------------------------------------- init

    def _init_parameters(self):
        g = torch.Generator().manual_seed(int(self.config.rng_seed))

        def normal_(t, std):
            with torch.no_grad():
                t.copy_(torch.randn(t.shape, generator=g) * std)

        for fc in self.mapping:
            normal_(fc.weight, fc.in_features ** -0.5)
            with torch.no_grad():
                fc.bias.zero_()
        for aff in self.affines:
            normal_(aff.weight, aff.in_features ** -0.5)
            with torch.no_grad():
                aff.bias.fill_(1.0)  # modulation centered at one
        for layer in self.layers:
            fan_in = layer.in_ch * 9
            normal_(layer.conv_weight, fan_in ** -0.5)
            with torch.no_grad():
                layer.bias.zero_()
                layer.noise_strength.zero_()
        normal_(self.const, 1.0)
        normal_(self.rgb_weight, self.config.channels_per_layer[-1] ** -0.5)
        with torch.no_grad():
            self.rgb_bias.zero_()
        for i in range(self.config.num_layers):
            normal_(self.get_buffer(f"noise_{i}"), 1.0)
        # tracked mean style, used by truncation
        with torch.no_grad():
            z = torch.randn(_MEAN_STYLE_SAMPLES, self.config.latent_dim, generator=g)
            self.w_mean.zero_()
            self.w_mean.copy_(self._map(z).mean(dim=0))

    # ------------------------------------------------------------- mapping

    def _map(self, z: torch.Tensor) -> torch.Tensor:
        x = z * torch.rsqrt(z.pow(2).mean(dim=-1, keepdim=True) + 1e-8)
        for fc in self.mapping:
            x = F.leaky_relu(fc(x), 0.2)
        return x

    def map_latent(self, z: torch.Tensor, truncation: float = 1.0) -> torch.Tensor:
        """Map latent noise to a style vector, pulled toward the mean style.

        truncation=0 returns the tracked mean style exactly; 1 disables
        truncation. Accepts a single vector or a batch.
        """
        z = torch.as_tensor(z, dtype=self.w_mean.dtype)
        if not torch.isfinite(z).all():
            raise DomainError("latent code contains non-finite entries")
        single = z.ndim == 1
        zb = z.unsqueeze(0) if single else z
        if zb.shape[-1] != self.config.latent_dim:
            raise DomainError(f"latent code has dim {zb.shape[-1]}, expected {self.config.latent_dim}")
        if truncation == 0.0:
            w = self.w_mean.unsqueeze(0).expand(zb.shape[0], -1).clone()
        else:
            w = self.w_mean + truncation * (self._map(zb) - self.w_mean)
        return w[0] if single else w

    def sample_styles(self, count: int, seed: int, truncation: float = 1.0) -> list[torch.Tensor]:
        """Draw seeded latents and map them; convenience for CLI/service."""
        g = torch.Generator().manual_seed(int(seed))
        z = torch.randn(count, self.config.latent_dim, generator=g)
        with torch.no_grad():
            w = self.map_latent(z, truncation)
        return [w[i] for i in range(count)]

    def styles_to_coeffs(self, stack: StyleStack) -> StyleCoeffs:
        """Apply the per-layer affines: sigma_i = A_i w_i + b_i."""
        if stack.num_layers != self.config.num_layers:
            raise DomainError(f"stack has {stack.num_layers} rows, generator has {self.config.num_layers} layers")
        if stack.latent_dim != self.config.latent_dim:
            raise DomainError(f"stack dim {stack.latent_dim} != latent_dim {self.config.latent_dim}")
        return StyleCoeffs(tuple(self.affines[i](stack.rows[i]) for i in range(self.config.num_layers)))

    def coeffs_to_batched(self, coeffs: StyleCoeffs) -> list[torch.Tensor]:
        return [v.unsqueeze(0) for v in coeffs.per_layer]

    # ------------------------------------------------------------ synthesis

    def noise_for(self, i: int, height: int, width: int, origin: tuple[int, int] = (0, 0)) -> torch.Tensor:
        """Fixed per-layer noise extended to any size by circular tiling.

        origin shifts the tile phase so off-grid placements (panorama spans)
        line up with the noise a standalone render would have seen.
        """
        base = self.get_buffer(f"noise_{i}")
        hi = (torch.arange(height) + origin[0]) % base.shape[2]
        wi = (torch.arange(width) + origin[1]) % base.shape[3]
        return base[:, :, hi][:, :, :, wi]

    def _split_sigma(self, coeffs, i: int):
        v = coeffs[i] if isinstance(coeffs, (list, tuple)) else coeffs.per_layer[i]
        want = self.config.sigma_width(i)
        if v.shape[-1] != want:
            raise DomainError(f"layer {i} style coefficients have width {v.shape[-1]}, expected {want}")
        if i == self.config.num_layers - 1:
            cut = self.config.in_channels(i)
            return v[..., :cut], v[..., cut:]
        return v, None

    def layer_forward(self, i: int, x: torch.Tensor, conv_style: torch.Tensor,
                      noise_origin: tuple[int, int] = (0, 0)) -> torch.Tensor:
        layer = self.layers[i]
        if x.shape[1] != layer.in_ch:
            raise InjectionError(f"layer {i} expects {layer.in_ch} channels, got {x.shape[1]}")
        if layer.upsample:
            x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
        x = modulated_conv2d(x, layer.conv_weight, conv_style)
        noise = self.noise_for(i, x.shape[2], x.shape[3], noise_origin).to(x.dtype)
        x = x + layer.noise_strength * noise
        return F.leaky_relu(x + layer.bias.reshape(1, -1, 1, 1), 0.2)

    def rgb_forward(self, x: torch.Tensor, rgb_style: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.config.channels_per_layer[-1]:
            raise InjectionError(
                f"RGB head expects {self.config.channels_per_layer[-1]} channels, got {x.shape[1]}")
        y = modulated_conv2d(x, self.rgb_weight, rgb_style, demodulate=False, padding=0)
        return torch.tanh(RGB_GAIN * (y + self.rgb_bias.reshape(1, -1, 1, 1)))

    def synthesize(self, styles: StyleCoeffs | StyleStack,
                   hooks: HookSet | None = None) -> tuple[torch.Tensor, dict[int, FeatureMap]]:
        """Run the synthesis stack; returns (image in [-1,1] of shape 3xHxW, captures).

        Capture hooks record f_i after layer i; edits and injections replace
        f_i before layer i+1 consumes it. Injected maps may change H and W;
        the output image scales by the same integer factors.
        """
        coeffs = self.styles_to_coeffs(styles) if isinstance(styles, StyleStack) else styles
        if coeffs.num_layers != self.config.num_layers:
            raise DomainError("style coefficients layer count mismatch")
        hooks = hooks or HookSet()
        num_layers = self.config.num_layers
        bad = [i for i in hooks.layer_indices() if not 0 <= i < num_layers]
        if bad:
            raise DomainError(f"hook layer indices out of range: {sorted(bad)}")
        capture = hooks.capture_set(num_layers)

        captured: dict[int, FeatureMap] = {}
        x = self.const
        rgb_style = None
        for i in range(num_layers):
            conv_style, rgb_style_i = self._split_sigma(coeffs, i)
            if rgb_style_i is not None:
                rgb_style = rgb_style_i
            x = self.layer_forward(i, x, conv_style)
            for fn in hooks.edit.get(i, ()):  # type: ignore[union-attr]
                out = fn(FeatureMap(i, x))
                x = out.data if isinstance(out, FeatureMap) else torch.as_tensor(out)
            if i in hooks.inject:
                inj = hooks.inject[i]
                data = inj.data if isinstance(inj, FeatureMap) else torch.as_tensor(inj)
                if data.ndim != 4 or data.shape[1] != self.layers[i].out_ch:
                    raise InjectionError(
                        f"injected map for layer {i} must be Bx{self.layers[i].out_ch}xHxW, "
                        f"got shape {tuple(data.shape)}")
                x = data.to(x.dtype)
            if i in capture:
                captured[i] = FeatureMap(i, x.clone())
        img = self.rgb_forward(x, rgb_style)
        return img[0], captured

    def render(self, styles: StyleCoeffs | StyleStack) -> torch.Tensor:
        with torch.no_grad():
            return self.synthesize(styles)[0]

    def clone(self) -> "Generator":
        return copy.deepcopy(self)


# ----------------------------------------------------------------- swapping

_LAYER_PAT = re.compile(r"^(?:affines|layers)\.(\d+)\.|^noise_(\d+)$")


def parameter_layer(name: str, num_layers: int) -> int:
    """Layer index owning a state-dict entry; covers every parameter and buffer."""
    m = _LAYER_PAT.match(name)
    if m:
        return int(m.group(1) or m.group(2))
    if name.startswith(("rgb_weight", "rgb_bias")):
        return num_layers - 1
    if name.startswith(("mapping.", "const", "w_mean")):
        return 0
    raise KeyError(f"unrecognized parameter name: {name}")


def swap_weights(gen_a: Generator, gen_b: Generator, layer_set: Iterable[int]) -> Generator:
    """New generator taking gen_b's parameters at layer_set, gen_a's elsewhere."""
    if gen_a.config.layout() != gen_b.config.layout():
        raise ConfigurationError("swap_weights requires identical generator layouts")
    layer_set = frozenset(int(i) for i in layer_set)
    bad = [i for i in layer_set if not 0 <= i < gen_a.config.num_layers]
    if bad:
        raise DomainError(f"layer indices out of range: {sorted(bad)}")
    out = gen_a.clone()
    state = out.state_dict()
    b_state = gen_b.state_dict()
    for name in state:
        if parameter_layer(name, gen_a.config.num_layers) in layer_set:
            state[name] = b_state[name].clone()
    out.load_state_dict(state)
    return out


def init_generator(config: GeneratorConfig) -> Generator:
    """Construct a generator with parameters derived deterministically from rng_seed."""
    return Generator(config)
