"""Core pixel conventions and color-space conversions.

Images are numpy float64 arrays in interleaved row-major layout:
``(height, width, 3)`` for color, ``(height, width)`` for single-channel
rasters, with samples in [0, 1]. 8-bit files are decoded as ``v / 255``
and encoded as ``round(v * 255)`` with clamping; all processing happens
in floating point.

CIE-LAB uses the D65 white point and the sRGB companding curve
(IEC 61966-2-1). LAB arrays are float64 ``(height, width, 3)`` with
L in [0, 100] and a, b roughly in [-128, 127].
"""

from __future__ import annotations

import numpy as np

# Linear-RGB -> XYZ for sRGB primaries. Rows sum to the D65 white point,
# which keeps neutral grays at a = b = 0 after the LAB transform.
_XYZ_FROM_LINEAR = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_LINEAR_FROM_XYZ = np.linalg.inv(_XYZ_FROM_LINEAR)
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])

# Rec. 709 luma weights, applied to linearized RGB.
_LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

_DELTA = 6.0 / 29.0


def require_image(img: np.ndarray, channels: int | None = None, name: str = "image") -> np.ndarray:
    """Validate an image array and return it as float64.

    Checks dimensionality (2-D single channel or 3-D with 3 channels) and
    optionally the channel count. Raises ValueError on violations.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        if arr.shape[2] != 3:
            raise ValueError(f"{name}: expected 3 channels, got {arr.shape[2]}")
        got = 3
    elif arr.ndim == 2:
        got = 1
    else:
        raise ValueError(f"{name}: expected 2-D or 3-D array, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValueError(f"{name}: empty image")
    if channels is not None and got != channels:
        raise ValueError(f"{name}: expected {channels} channel(s), got {got}")
    return arr


def require_same_shape(a: np.ndarray, b: np.ndarray, names: str = "inputs") -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"{names}: spatial dimensions differ, {a.shape[:2]} vs {b.shape[:2]}")


def clamp01(img: np.ndarray) -> np.ndarray:
    """Clamp every sample to [0, 1]. NaN samples raise rather than clamp."""
    arr = np.asarray(img, dtype=np.float64)
    if np.isnan(arr).any():
        raise ValueError("clamp01: NaN sample encountered")
    return np.clip(arr, 0.0, 1.0)


def srgb_to_linear(srgb: np.ndarray) -> np.ndarray:
    """sRGB-encoded [0,1] samples to linear light (inverse companding)."""
    s = np.asarray(srgb, dtype=np.float64)
    return np.where(s <= 0.04045, s / 12.92, ((s + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(linear: np.ndarray) -> np.ndarray:
    """Linear-light [0,1] samples to sRGB encoding (forward companding)."""
    lin = np.asarray(linear, dtype=np.float64)
    lin = np.maximum(lin, 0.0)
    return np.where(lin <= 0.0031308, lin * 12.92, 1.055 * lin ** (1.0 / 2.4) - 0.055)


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 709 luminance of an sRGB image, computed on linearized values."""
    arr = require_image(img, channels=3, name="luminance input")
    return srgb_to_linear(arr) @ _LUMA_WEIGHTS


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3.0 * _DELTA * _DELTA) + 4.0 / 29.0)


def _lab_f_inv(u: np.ndarray) -> np.ndarray:
    return np.where(u > _DELTA, u**3, 3.0 * _DELTA * _DELTA * (u - 4.0 / 29.0))


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert an sRGB image in [0,1] to CIE-LAB (D65).

    Pipeline: inverse sRGB companding -> linear RGB -> XYZ -> LAB.
    Returns a float64 (H, W, 3) array holding L, a, b planes.
    """
    arr = require_image(img, channels=3, name="rgb_to_lab input")
    xyz = srgb_to_linear(arr) @ _XYZ_FROM_LINEAR.T
    f = _lab_f(xyz / _WHITE_D65)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_lab`; out-of-gamut results clamp to [0,1]."""
    arr = require_image(lab, channels=3, name="lab_to_rgb input")
    fy = (arr[..., 0] + 16.0) / 116.0
    fx = fy + arr[..., 1] / 500.0
    fz = fy - arr[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1) * _WHITE_D65
    linear = xyz @ _LINEAR_FROM_XYZ.T
    return np.clip(linear_to_srgb(linear), 0.0, 1.0)
