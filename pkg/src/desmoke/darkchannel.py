"""Dark channel, airlight estimation, and initial transmission.

The dark channel of a 3-channel image is the minimum over channels and
over a square window centered at each pixel. Windows truncate at image
borders; no padding values are invented, so the statistic is always a
minimum over real samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imagecore import require_image, require_same_shape
from .scatter import validate_airlight

TRANSMISSION_FLOOR = 1e-4


@dataclass(frozen=True)
class DcpParams:
    """Knobs for the dark-channel stage.

    patch_size: odd window side for the channel/window minimum.
    omega: haze retention factor in the transmission estimate.
    airlight_percentile: fraction of brightest dark-channel pixels that
        are candidates for the airlight pick.
    """

    patch_size: int = 15
    omega: float = 0.95
    airlight_percentile: float = 0.001

    def __post_init__(self):
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ValueError(f"patch_size must be odd and >= 1, got {self.patch_size}")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError(f"omega must lie in (0, 1], got {self.omega}")
        if not 0.0 < self.airlight_percentile <= 1.0:
            raise ValueError(
                f"airlight_percentile must lie in (0, 1], got {self.airlight_percentile}"
            )


def sliding_min_1d(arr: np.ndarray, radius: int, axis: int = -1) -> np.ndarray:
    """Windowed minimum along one axis, window ``2*radius + 1``.

    van Herk / Gil-Werman two-scan scheme: block prefix and suffix minima
    give every window minimum in O(1) per sample regardless of radius.
    +inf padding makes border windows reduce over in-bounds samples only,
    which is exactly window truncation.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    a = np.asarray(arr, dtype=np.float64)
    if radius == 0:
        return a.copy()
    a = np.moveaxis(a, axis, -1)
    n = a.shape[-1]
    w = 2 * radius + 1
    nblocks = -(-(n + 2 * radius) // w)
    total = nblocks * w
    pad = [(0, 0)] * (a.ndim - 1) + [(radius, total - n - radius)]
    padded = np.pad(a, pad, mode="constant", constant_values=np.inf)
    blocks = padded.reshape(a.shape[:-1] + (nblocks, w))
    prefix = np.minimum.accumulate(blocks, axis=-1).reshape(a.shape[:-1] + (total,))
    suffix = np.minimum.accumulate(blocks[..., ::-1], axis=-1)[..., ::-1]
    suffix = suffix.reshape(a.shape[:-1] + (total,))
    # window for output i spans padded[i : i + w]; it crosses at most one
    # block boundary, so its min is min(suffix-in-left-block, prefix-in-right)
    out = np.minimum(suffix[..., :n], prefix[..., w - 1 : w - 1 + n])
    return np.moveaxis(out, -1, axis)


def windowed_min(img: np.ndarray, patch_size: int) -> np.ndarray:
    """Square-window minimum of a single-channel raster (separable passes)."""
    if patch_size < 1 or patch_size % 2 == 0:
        raise ValueError(f"patch_size must be odd and >= 1, got {patch_size}")
    arr = require_image(img, channels=1, name="windowed_min input")
    radius = patch_size // 2
    return sliding_min_1d(sliding_min_1d(arr, radius, axis=0), radius, axis=1)


def dark_channel(img: np.ndarray, patch_size: int = 15) -> np.ndarray:
    """Per-pixel min over channels and the patch window (border-truncated)."""
    arr = require_image(img, channels=3, name="dark_channel input")
    return windowed_min(arr.min(axis=2), patch_size)


def estimate_airlight(img: np.ndarray, dark: np.ndarray, percentile: float = 0.001) -> np.ndarray:
    """Airlight from the brightest dark-channel pixels.

    Candidates are the top ``percentile`` fraction of pixels ranked by
    dark-channel value (ties broken by row-major index); the airlight is
    the RGB of the single candidate with maximal R+G+B, again breaking
    ties by lowest row-major index. Channels are floored at 0.01 so the
    transmission division stays well-conditioned.
    """
    arr = require_image(img, channels=3, name="estimate_airlight image")
    dk = require_image(dark, channels=1, name="dark channel")
    require_same_shape(arr, dk, "image/dark")
    if not 0.0 < percentile <= 1.0:
        raise ValueError(f"percentile must lie in (0, 1], got {percentile}")
    n = dk.size
    if n == 0:
        raise ValueError("estimate_airlight: empty image")
    count = max(1, math.ceil(percentile * n))
    flat_dark = dk.reshape(-1)
    flat_rgb = arr.reshape(-1, 3)
    order = np.lexsort((np.arange(n), -flat_dark))
    candidates = order[:count]
    intensity = flat_rgb[candidates].sum(axis=1)
    best = candidates[intensity == intensity.max()].min()
    return np.maximum(flat_rgb[best], 0.01)


def estimate_transmission(img: np.ndarray, airlight, params: DcpParams = DcpParams()) -> np.ndarray:
    """Initial transmission: ``1 - omega * windowed channel min of img/A``.

    Clamped to [1e-4, 1] so downstream arithmetic stays finite even where
    the image outshines the airlight.
    """
    arr = require_image(img, channels=3, name="estimate_transmission image")
    a = validate_airlight(airlight)
    normalized = arr / a
    dark_norm = windowed_min(normalized.min(axis=2), params.patch_size)
    return np.clip(1.0 - params.omega * dark_norm, TRANSMISSION_FLOOR, 1.0)
