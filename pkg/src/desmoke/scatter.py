"""Forward atmospheric scattering compositor and its exact inverse.

The medium model is ``obs = clean * t + A * (1 - t)`` with per-pixel
transmission ``t`` in (0, 1] and a global airlight color ``A``. The
compositor doubles as a synthesis oracle for round-trip testing: as long
as ``t >= t_min`` everywhere, :func:`invert_exact` recovers the clean
image to floating-point precision.
"""

from __future__ import annotations

import numpy as np

from .imagecore import require_image, require_same_shape


def validate_airlight(airlight) -> np.ndarray:
    """Coerce to a (3,) float vector; components must be in (0, 1].

    Zero components are rejected outright: the transmission estimator
    divides by each channel of A.
    """
    a = np.asarray(airlight, dtype=np.float64).reshape(-1)
    if a.shape != (3,):
        raise ValueError(f"airlight must have 3 components, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("airlight components must be finite")
    if np.any(a <= 0.0) or np.any(a > 1.0):
        raise ValueError(f"airlight components must lie in (0, 1], got {a.tolist()}")
    return a


def validate_transmission(t: np.ndarray) -> np.ndarray:
    tm = require_image(t, channels=1, name="transmission")
    if np.any(tm <= 0.0) or np.any(tm > 1.0):
        raise ValueError("transmission samples must lie in (0, 1]")
    return tm


def composite(clean: np.ndarray, t: np.ndarray, airlight) -> np.ndarray:
    """Apply the scattering model: ``clean * t + A * (1 - t)`` per channel.

    The result is a convex combination of clean and airlight, so it stays
    inside [0, 1] without clamping.
    """
    img = require_image(clean, channels=3, name="clean")
    tm = validate_transmission(t)
    a = validate_airlight(airlight)
    require_same_shape(img, tm, "clean/transmission")
    tm3 = tm[..., None]
    return img * tm3 + a * (1.0 - tm3)


def invert_exact(obs: np.ndarray, t: np.ndarray, airlight, t_min: float = 0.1) -> np.ndarray:
    """Algebraic inverse of :func:`composite` with a transmission floor.

    ``out = (obs - A) / max(t, t_min) + A``, clamped to [0, 1] at the end.
    Exact wherever ``t >= t_min``; below the floor, residual haze remains.
    """
    img = require_image(obs, channels=3, name="obs")
    tm = require_image(t, channels=1, name="transmission")
    a = validate_airlight(airlight)
    require_same_shape(img, tm, "obs/transmission")
    if not 0.0 < t_min <= 1.0:
        raise ValueError(f"t_min must lie in (0, 1], got {t_min}")
    denom = np.maximum(tm, t_min)[..., None]
    return np.clip((img - a) / denom + a, 0.0, 1.0)


def synth_field(kind: str, shape: tuple[int, int], **params) -> np.ndarray:
    """Deterministic transmission field for fixtures and batch synthesis.

    Kinds:
      - ``constant``: value=v, all samples v.
      - ``horizontal-ramp`` (alias ``ramp``): start, stop; linear in the
        column index, identical rows.
      - ``radial``: center, edge; linear in normalized distance from the
        image center, so the farthest corners hit exactly ``edge``.
    """
    h, w = int(shape[0]), int(shape[1])
    if h < 1 or w < 1:
        raise ValueError(f"field shape must be positive, got {shape}")

    def _check(name, v):
        v = float(v)
        if not 0.0 < v <= 1.0:
            raise ValueError(f"synth_field {kind}: parameter {name}={v} outside (0, 1]")
        return v

    if kind == "constant":
        value = _check("value", params.pop("value"))
        field = np.full((h, w), value)
    elif kind in ("horizontal-ramp", "ramp"):
        start = _check("start", params.pop("start"))
        stop = _check("stop", params.pop("stop"))
        ramp = np.linspace(start, stop, w) if w > 1 else np.array([start])
        field = np.broadcast_to(ramp, (h, w)).copy()
    elif kind == "radial":
        center = _check("center", params.pop("center"))
        edge = _check("edge", params.pop("edge"))
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        yy, xx = np.mgrid[0:h, 0:w]
        dist = np.hypot(yy - cy, xx - cx)
        max_dist = np.hypot(cy, cx)
        frac = dist / max_dist if max_dist > 0 else np.zeros_like(dist)
        field = center + (edge - center) * frac
    else:
        raise ValueError(f"unknown transmission field kind {kind!r}")
    if params:
        raise ValueError(f"synth_field {kind}: unexpected parameters {sorted(params)}")
    return field
