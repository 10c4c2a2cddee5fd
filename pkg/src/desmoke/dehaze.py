"""End-to-end single-image restoration.

Stage order is fixed: dark channel -> airlight (unless overridden) ->
initial transmission -> guided refinement -> scattering inversion ->
gamma enhancement. The recovered image is clamped to [0, 1] before the
gamma step, which preserves that range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import scatter
from .darkchannel import DcpParams, dark_channel, estimate_airlight, estimate_transmission
from .guidedfilter import GuidedFilterParams, refine_transmission
from .imagecore import require_image


@dataclass(frozen=True)
class DehazeParams:
    dcp: DcpParams = field(default_factory=DcpParams)
    gf: GuidedFilterParams = field(default_factory=GuidedFilterParams)
    t_min: float = 0.1
    gamma: float = 0.5
    airlight_override: tuple[float, float, float] | None = None

    def __post_init__(self):
        if not 0.0 < self.t_min <= 1.0:
            raise ValueError(f"t_min must lie in (0, 1], got {self.t_min}")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.airlight_override is not None:
            ov = tuple(float(v) for v in self.airlight_override)
            scatter.validate_airlight(ov)
            object.__setattr__(self, "airlight_override", ov)


@dataclass(frozen=True)
class DehazeReport:
    """Per-image diagnostics emitted alongside the restored frame."""

    airlight: tuple[float, float, float]
    airlight_overridden: bool
    t_min: float
    t_mean: float
    t_max: float
    t_floor_fraction: float  # pixels whose refined t fell below t_min
    output_clamped_fraction: float  # samples clamped into [0, 1] after inversion

    def as_dict(self) -> dict:
        return {
            "airlight": list(self.airlight),
            "airlight_overridden": self.airlight_overridden,
            "transmission": {"min": self.t_min, "mean": self.t_mean, "max": self.t_max},
            "t_floor_fraction": self.t_floor_fraction,
            "output_clamped_fraction": self.output_clamped_fraction,
        }


def recover(obs: np.ndarray, t: np.ndarray, airlight, t_min: float = 0.1) -> np.ndarray:
    """Invert the scattering model with a transmission floor (clamped)."""
    return scatter.invert_exact(obs, t, airlight, t_min)


def gamma_enhance(img: np.ndarray, gamma: float) -> np.ndarray:
    """Per-sample power curve; inputs must already be clamped to [0, 1]."""
    arr = require_image(img)
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise ValueError("gamma_enhance requires samples in [0, 1]")
    return arr**gamma


def dehaze_image(obs: np.ndarray, params: DehazeParams = DehazeParams()) -> tuple[np.ndarray, DehazeReport]:
    """Restore one smoky observation; returns (image, diagnostics)."""
    arr = require_image(obs, channels=3, name="observation")

    if params.airlight_override is not None:
        airlight = scatter.validate_airlight(params.airlight_override)
        overridden = True
    else:
        dark = dark_channel(arr, params.dcp.patch_size)
        airlight = estimate_airlight(arr, dark, params.dcp.airlight_percentile)
        overridden = False

    t_hat = estimate_transmission(arr, airlight, params.dcp)
    if params.gf.radius > 0:
        t_refined = refine_transmission(arr, t_hat, params.gf)
    else:
        t_refined = t_hat

    denom = np.maximum(t_refined, params.t_min)[..., None]
    raw = (arr - airlight) / denom + airlight
    restored = np.clip(raw, 0.0, 1.0)
    out = gamma_enhance(restored, params.gamma)

    report = DehazeReport(
        airlight=tuple(float(v) for v in airlight),
        airlight_overridden=overridden,
        t_min=float(t_refined.min()),
        t_mean=float(t_refined.mean()),
        t_max=float(t_refined.max()),
        t_floor_fraction=float(np.mean(t_refined < params.t_min)),
        output_clamped_fraction=float(np.mean((raw < 0.0) | (raw > 1.0))),
    )
    return out, report
