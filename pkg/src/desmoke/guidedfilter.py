"""Guided filtering for edge-preserving transmission refinement.

Box means are computed with summed-area tables (O(1) per pixel for any
radius) and count-normalized over border-truncated windows, so constants
pass through exactly at every pixel including corners.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .darkchannel import TRANSMISSION_FLOOR
from .imagecore import luminance, require_image, require_same_shape


@dataclass(frozen=True)
class GuidedFilterParams:
    # radius 0 degenerates to the identity filter, used to skip refinement
    radius: int = 61
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


def box_filter(img: np.ndarray, radius: int) -> np.ndarray:
    """Windowed mean over ``(2r+1)^2`` windows clipped to image bounds.

    Normalization uses the actual in-bounds pixel count of each window.
    Windows larger than the image truncate to the full image.
    """
    arr = require_image(img, channels=1, name="box_filter input")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0:
        return arr.copy()
    h, w = arr.shape
    sat = np.zeros((h + 1, w + 1))
    np.cumsum(np.cumsum(arr, axis=0), axis=1, out=sat[1:, 1:])
    y0 = np.maximum(np.arange(h) - radius, 0)
    y1 = np.minimum(np.arange(h) + radius, h - 1) + 1
    x0 = np.maximum(np.arange(w) - radius, 0)
    x1 = np.minimum(np.arange(w) + radius, w - 1) + 1
    sums = sat[np.ix_(y1, x1)] - sat[np.ix_(y0, x1)] - sat[np.ix_(y1, x0)] + sat[np.ix_(y0, x0)]
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return sums / counts


def guided_filter(
    guide: np.ndarray, src: np.ndarray, params: GuidedFilterParams = GuidedFilterParams()
) -> np.ndarray:
    """Filter ``src`` as a locally linear function of ``guide``.

    Per window: a = cov(guide, src) / (var(guide) + eps),
    b = mean(src) - a * mean(guide); the output is
    mean(a) * guide + mean(b) with all means over the box window.
    """
    g = require_image(guide, channels=1, name="guide")
    p = require_image(src, channels=1, name="filter input")
    require_same_shape(g, p, "guide/input")
    r = params.radius
    mean_g = box_filter(g, r)
    mean_p = box_filter(p, r)
    cov_gp = box_filter(g * p, r) - mean_g * mean_p
    var_g = box_filter(g * g, r) - mean_g * mean_g
    a = cov_gp / (var_g + params.epsilon)
    b = mean_p - a * mean_g
    return box_filter(a, r) * g + box_filter(b, r)


def refine_transmission(
    guide_rgb: np.ndarray, t_hat: np.ndarray, params: GuidedFilterParams = GuidedFilterParams()
) -> np.ndarray:
    """Smooth the raw transmission against the observation's luminance.

    The guide is the Rec. 709 luminance of the (smoky) input image; the
    result clamps back to [1e-4, 1].
    """
    arr = require_image(guide_rgb, channels=3, name="guide image")
    tm = require_image(t_hat, channels=1, name="transmission")
    require_same_shape(arr, tm, "guide/transmission")
    refined = guided_filter(luminance(arr), tm, params)
    return np.clip(refined, TRANSMISSION_FLOOR, 1.0)
