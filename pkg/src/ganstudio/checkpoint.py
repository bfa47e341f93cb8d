"""Checkpoint container: a JSON header followed by raw float32 arrays.

Layout (all integers little-endian):

    bytes 0..3    magic b"GSCP"
    bytes 4..7    uint32 header length N
    bytes 8..8+N  UTF-8 JSON header
    remainder     concatenated array data, float32 little-endian, C order

The header carries ``format_version``, the generator config, and a manifest
listing every array name and shape in the order the data section stores them.
Names are sorted, JSON keys are sorted, and floats are written verbatim from
the tensors, so saving a loaded checkpoint reproduces the file byte for byte.
Auxiliary arrays (for example fitted sigma-space Gaussian moments) live in the
same container under an ``aux`` manifest.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import CheckpointError, CheckpointIntegrityError
from .generator import Generator, GeneratorConfig

MAGIC = b"GSCP"
FORMAT_VERSION = 1


def _encode_header(config: GeneratorConfig, params: list[tuple[str, tuple[int, ...]]],
                   aux: list[tuple[str, tuple[int, ...]]], extra: dict) -> bytes:
    header = {
        "format_version": FORMAT_VERSION,
        "config": config.to_json_dict(),
        "params": [{"name": n, "shape": list(s)} for n, s in params],
        "aux": [{"name": n, "shape": list(s)} for n, s in aux],
        "extra": extra,
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _array_bytes(t: torch.Tensor) -> bytes:
    return np.ascontiguousarray(t.detach().cpu().numpy().astype("<f4", copy=False)).tobytes()


def save_checkpoint(gen: Generator, path: str | Path,
                    aux: dict[str, torch.Tensor] | None = None,
                    extra: dict | None = None) -> None:
    """Write the generator's full state (parameters and buffers) to path."""
    state = gen.state_dict()
    names = sorted(state)
    aux = dict(aux or {})
    aux_names = sorted(aux)
    header = _encode_header(
        gen.config,
        [(n, tuple(state[n].shape)) for n in names],
        [(n, tuple(aux[n].shape)) for n in aux_names],
        extra or {},
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for n in names:
            fh.write(_array_bytes(state[n]))
        for n in aux_names:
            fh.write(_array_bytes(aux[n]))


def _read_header(blob: bytes) -> tuple[dict, int]:
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise CheckpointError("not a checkpoint container (bad magic)")
    (hlen,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + hlen:
        raise CheckpointIntegrityError("truncated checkpoint header")
    try:
        header = json.loads(blob[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointIntegrityError(f"corrupt checkpoint header: {e}") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format_version {header.get('format_version')!r}, "
            f"expected {FORMAT_VERSION}")
    return header, 8 + hlen


def load_checkpoint(path: str | Path,
                    with_aux: bool = False):
    """Rebuild a generator from a checkpoint; round-trips bit-exactly.

    Returns the generator, or (generator, aux_dict) when with_aux is set.
    """
    blob = Path(path).read_bytes()
    header, offset = _read_header(blob)
    config = GeneratorConfig.from_json_dict(header["config"])
    gen = Generator(config)
    state = gen.state_dict()

    manifest = [(e["name"], tuple(e["shape"])) for e in header["params"]]
    aux_manifest = [(e["name"], tuple(e["shape"])) for e in header.get("aux", [])]
    names = {n for n, _ in manifest}
    if names != set(state):
        unknown = sorted(names - set(state))
        missing = sorted(set(state) - names)
        raise CheckpointError(f"parameter set mismatch: unknown={unknown} missing={missing}")

    total = sum(int(np.prod(s)) * 4 for _, s in manifest + aux_manifest)
    if len(blob) - offset != total:
        raise CheckpointIntegrityError(
            f"checkpoint data section has {len(blob) - offset} bytes, expected {total}")

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape)) * 4
        arr = np.frombuffer(blob, dtype="<f4", count=count // 4, offset=offset).reshape(shape)
        offset += count
        return torch.from_numpy(arr.copy())

    for name, shape in manifest:
        if tuple(state[name].shape) != shape:
            raise CheckpointError(f"parameter {name} has shape {shape}, expected {tuple(state[name].shape)}")
        state[name] = take(shape)
    gen.load_state_dict(state)
    aux = {name: take(shape) for name, shape in aux_manifest}
    return (gen, aux) if with_aux else gen


def checkpoint_hash(path: str | Path) -> str:
    """SHA-256 of the container bytes; identifies a project's generator."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
