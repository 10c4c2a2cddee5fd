"""Deterministic procedural fixtures for tests and demos.

Every generator is a pure function of its spec (seed included), so the
corpus needs no stored binaries. Clean scenes embed a near-zero channel
sample in every 15x15 window by construction: dark pixels are stamped on
an 8-pixel grid, and any (possibly border-truncated) 15x15 window covers
at least 8 consecutive rows and columns, hence a grid point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .harmonize import gaussian_blur
from .imagecore import clamp01, require_image
from .metrics import SceneEval, ViewScore

_DARK_SPACING = 8
_DARK_CEILING = 0.04


@dataclass(frozen=True)
class FixtureSpec:
    seed: int = 0
    height: int = 32
    width: int = 32
    kind: str = "textured-noise"  # or "gradient", "checker"
    checker_period: int = 2

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError(f"fixture size must be positive, got {self.height}x{self.width}")
        if self.kind not in ("gradient", "checker", "textured-noise"):
            raise ValueError(f"unknown fixture kind {self.kind!r}")
        if self.checker_period < 1:
            raise ValueError(f"checker_period must be >= 1, got {self.checker_period}")


def _stamp_dark_grid(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    h, w, _ = img.shape
    ys = np.arange(0, h, _DARK_SPACING)
    xs = np.arange(0, w, _DARK_SPACING)
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            img[y, x, (i + j) % 3] = rng.uniform(0.0, _DARK_CEILING)
    return img


def make_clean_scene(spec: FixtureSpec) -> np.ndarray:
    """Deterministic 3-channel scene with the dark-window guarantee.

    Checker scenes are pure alternating 0/1 blocks (their black cells
    already satisfy the guarantee for small periods); gradient and
    textured-noise scenes get the dark grid stamped in.
    """
    h, w = spec.height, spec.width
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "checker":
        yy, xx = np.mgrid[0:h, 0:w]
        cells = ((yy // spec.checker_period + xx // spec.checker_period) % 2).astype(np.float64)
        return np.repeat(cells[..., None], 3, axis=2)
    if spec.kind == "gradient":
        yy, xx = np.mgrid[0:h, 0:w]
        img = np.empty((h, w, 3))
        img[..., 0] = xx / max(w - 1, 1)
        img[..., 1] = yy / max(h - 1, 1)
        img[..., 2] = (xx + yy) / max(w + h - 2, 1)
        return _stamp_dark_grid(img, rng)
    # low-frequency texture: blurred noise stretched back to a usable range,
    # so the scene behaves like natural content under chroma subsampling
    img = gaussian_blur(rng.uniform(0.0, 1.0, size=(h, w, 3)), 1.5)
    for c in range(3):
        plane = img[..., c]
        lo, hi = plane.min(), plane.max()
        if hi > lo:
            img[..., c] = 0.05 + 0.95 * (plane - lo) / (hi - lo)
    return _stamp_dark_grid(img, rng)


def make_donor_variant(src: np.ndarray, gains, offset) -> np.ndarray:
    """Global color cast: ``clamp01(src * gains + offset)`` per channel."""
    arr = require_image(src, channels=3, name="donor source")
    g = np.asarray(gains, dtype=np.float64).reshape(-1)
    o = np.asarray(offset, dtype=np.float64).reshape(-1)
    if g.shape != (3,) or o.shape != (3,):
        raise ValueError("gains and offset must each have 3 components")
    if np.any(g <= 0.0):
        raise ValueError(f"gains must be > 0, got {g.tolist()}")
    return clamp01(arr * g + o)


def make_eval_scene(scene: str, n_views: int, seed: int = 0, with_lpips: bool = True) -> SceneEval:
    """Schema-conformant eval record with plausible pseudo-random scores."""
    if n_views < 1:
        raise ValueError(f"n_views must be >= 1, got {n_views}")
    rng = np.random.default_rng(seed)
    views = []
    for i in range(n_views):
        views.append(
            ViewScore(
                view_id=f"view_{i:03d}",
                psnr=round(float(rng.uniform(8.0, 30.0)), 3),
                ssim=round(float(rng.uniform(0.2, 0.9)), 3),
                lpips=round(float(rng.uniform(0.3, 0.8)), 3) if with_lpips else None,
            )
        )
    return SceneEval.from_views(scene, views)
