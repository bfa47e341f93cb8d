"""PNG I/O: images are 3xHxW float tensors in [-1,1], masks HxW in [0,1]."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import torch
from PIL import Image as PILImage

from .errors import DomainError


def image_to_uint8(img: torch.Tensor) -> np.ndarray:
    """[-1,1] float image to HxWx3 uint8 with round-half-even."""
    if img.ndim != 3 or img.shape[0] != 3:
        raise DomainError(f"expected 3xHxW image, got shape {tuple(img.shape)}")
    x = img.detach().cpu().numpy()
    u = np.rint(np.clip((x + 1.0) / 2.0, 0.0, 1.0) * 255.0)
    return u.astype(np.uint8).transpose(1, 2, 0)


def image_from_uint8(u: np.ndarray) -> torch.Tensor:
    if u.ndim != 3 or u.shape[2] != 3:
        raise DomainError(f"expected HxWx3 uint8 array, got shape {u.shape}")
    x = u.astype(np.float32) / 255.0 * 2.0 - 1.0
    return torch.from_numpy(x.transpose(2, 0, 1))


def encode_png(img: torch.Tensor) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(image_to_uint8(img), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: torch.Tensor, path: str | Path) -> None:
    Path(path).write_bytes(encode_png(img))


def load_png(path_or_bytes) -> torch.Tensor:
    src = io.BytesIO(path_or_bytes) if isinstance(path_or_bytes, (bytes, bytearray)) else path_or_bytes
    with PILImage.open(src) as im:
        return image_from_uint8(np.asarray(im.convert("RGB")))


def mask_to_uint8(mask: torch.Tensor) -> np.ndarray:
    """[0,1] mask to HxW uint8, linear scaling with round-half-even."""
    m = mask.detach().cpu().numpy()
    return np.rint(np.clip(m, 0.0, 1.0) * 255.0).astype(np.uint8)


def encode_mask_png(mask: torch.Tensor) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(mask_to_uint8(mask), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def save_mask_png(mask: torch.Tensor, path: str | Path) -> None:
    Path(path).write_bytes(encode_mask_png(mask))


def load_mask_png(path_or_bytes) -> torch.Tensor:
    src = io.BytesIO(path_or_bytes) if isinstance(path_or_bytes, (bytes, bytearray)) else path_or_bytes
    with PILImage.open(src) as im:
        u = np.asarray(im.convert("L"))
    return torch.from_numpy(u.astype(np.float32) / 255.0)
