"""Image file decode/encode helpers.

PNG is used for lossless intermediates (restored frames, synthetic
composites); JPEG is reserved for final harmonized deliverables. Encoding
is done in memory and written atomically (temp file + rename) so batch
runs never leave half-written outputs behind.
"""

from __future__ import annotations

import io
import os
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .imagecore import require_image

# Pillow subsampling names for baseline JPEG output.
_SUBSAMPLING = {"4:4:4": 0, "4:2:2": 1, "4:2:0": 2}


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Quantize float samples in [0,1] to uint8 with round-half-up-to-even."""
    arr = np.asarray(img, dtype=np.float64)
    return np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)


def from_uint8(arr: np.ndarray) -> np.ndarray:
    return arr.astype(np.float64) / 255.0


def load_image(path: str | Path) -> np.ndarray:
    """Decode an image file to float64 in [0,1].

    Color files decode to (H, W, 3); single-channel files to (H, W).
    """
    with PILImage.open(path) as im:
        if im.mode == "L":
            return from_uint8(np.asarray(im))
        return from_uint8(np.asarray(im.convert("RGB")))


def encode_png_bytes(img: np.ndarray) -> bytes:
    arr = to_uint8(require_image(img))
    mode = "L" if arr.ndim == 2 else "RGB"
    buf = io.BytesIO()
    PILImage.fromarray(arr, mode).save(buf, format="PNG")
    return buf.getvalue()


def encode_jpeg_bytes(img: np.ndarray, quality: int = 95, subsampling: str = "4:2:0") -> bytes:
    """Encode as baseline JPEG (no progressive scan, no restart markers)."""
    if subsampling not in _SUBSAMPLING:
        raise ValueError(f"unknown chroma subsampling {subsampling!r}")
    if not 1 <= quality <= 100:
        raise ValueError(f"jpeg quality {quality} outside [1, 100]")
    arr = to_uint8(require_image(img, channels=3))
    buf = io.BytesIO()
    PILImage.fromarray(arr, "RGB").save(
        buf,
        format="JPEG",
        quality=quality,
        subsampling=_SUBSAMPLING[subsampling],
        progressive=False,
    )
    return buf.getvalue()


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write bytes via a temp file in the same directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def save_png(img: np.ndarray, path: str | Path) -> None:
    atomic_write_bytes(path, encode_png_bytes(img))


def save_jpeg(img: np.ndarray, path: str | Path, quality: int = 95, subsampling: str = "4:2:0") -> None:
    atomic_write_bytes(path, encode_jpeg_bytes(img, quality=quality, subsampling=subsampling))
