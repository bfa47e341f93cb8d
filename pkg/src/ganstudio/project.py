"""On-disk project store: checkpoints, content-addressed assets, styles, jobs.

Layout under the project directory:

    manifest.json      project metadata incl. the generator checkpoint hash
    checkpoints/       generator containers
    images/            PNG assets, content-addressed as sha256 of the bytes
    masks/             mask PNGs
    plans/             serialized panorama plans and requests
    jobs/              one JSON file per job, rewritten on state change
    styles/            style stacks as raw float32, content-addressed

Content addressing makes identical requests produce identical URIs and bytes,
which is what the service's determinism guarantees rest on.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np
import torch

from .checkpoint import checkpoint_hash, load_checkpoint, save_checkpoint
from .errors import DomainError
from .generator import Generator, GeneratorConfig, StyleStack

_SUBDIRS = ("checkpoints", "images", "masks", "plans", "jobs", "styles")
_URI_RE = re.compile(r"^(images|masks|plans|styles|jobs)/[A-Za-z0-9._-]+$")


class Project:
    """A project directory bound to one generator checkpoint."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in _SUBDIRS:
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._styles: dict[str, StyleStack] = {}

    # ------------------------------------------------------------ manifest

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def read_manifest(self) -> dict:
        if not self.manifest_path.exists():
            return {}
        return json.loads(self.manifest_path.read_text())

    def write_manifest(self, manifest: dict) -> None:
        self.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))

    def attach_generator(self, gen: Generator, name: str = "generator.ckpt") -> str:
        """Save the checkpoint and record its hash in the manifest."""
        path = self.root / "checkpoints" / name
        save_checkpoint(gen, path)
        digest = checkpoint_hash(path)
        self.write_manifest({"checkpoint": f"checkpoints/{name}", "checkpoint_hash": digest,
                             "config": gen.config.to_json_dict()})
        return digest

    def load_generator(self) -> tuple[Generator, str]:
        manifest = self.read_manifest()
        if "checkpoint" not in manifest:
            raise DomainError(f"project at {self.root} has no checkpoint; attach one first")
        path = self.root / manifest["checkpoint"]
        digest = checkpoint_hash(path)
        if digest != manifest.get("checkpoint_hash"):
            raise DomainError("manifest checkpoint_hash does not match the checkpoint on disk")
        return load_checkpoint(path), digest

    def ensure_generator(self, config: GeneratorConfig | None = None) -> tuple[Generator, str]:
        """Load the project generator, creating a default one if absent."""
        if "checkpoint" in self.read_manifest():
            return self.load_generator()
        gen = Generator(config or GeneratorConfig())
        digest = self.attach_generator(gen)
        return gen, digest

    # -------------------------------------------------------------- assets

    def _check_uri(self, uri: str) -> Path:
        if not _URI_RE.match(uri):
            raise DomainError(f"invalid asset uri {uri!r}")
        return self.root / uri

    def put_asset(self, data: bytes, kind: str = "images", suffix: str = ".png") -> str:
        digest = hashlib.sha256(data).hexdigest()
        uri = f"{kind}/{digest}{suffix}"
        path = self._check_uri(uri)
        if not path.exists():
            path.write_bytes(data)
        return uri

    def get_asset(self, uri: str) -> bytes:
        path = self._check_uri(uri)
        if not path.exists():
            raise FileNotFoundError(uri)
        return path.read_bytes()

    def has_asset(self, uri: str) -> bool:
        try:
            return self._check_uri(uri).exists()
        except DomainError:
            return False

    # -------------------------------------------------------------- styles

    def put_style(self, stack: StyleStack) -> str:
        data = np.ascontiguousarray(stack.rows.detach().numpy().astype("<f4")).tobytes()
        digest = hashlib.sha256(data).hexdigest()
        style_id = f"st-{digest[:16]}"
        (self.root / "styles" / f"{style_id}.f32").write_bytes(data)
        self._styles[style_id] = stack
        return style_id

    def get_style(self, style_id: str, num_layers: int, latent_dim: int) -> StyleStack:
        if style_id in self._styles:
            return self._styles[style_id]
        path = self.root / "styles" / f"{style_id}.f32"
        if not re.match(r"^st-[0-9a-f]{16}$", style_id) or not path.exists():
            raise KeyError(style_id)
        arr = np.frombuffer(path.read_bytes(), dtype="<f4").reshape(num_layers, latent_dim)
        stack = StyleStack(torch.from_numpy(arr.copy()))
        self._styles[style_id] = stack
        return stack
