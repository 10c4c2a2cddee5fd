"""Batch smoke/haze restoration toolkit.

Building blocks: forward scattering synthesis (`scatter`), dark-channel
transmission estimation (`darkchannel`), guided-filter refinement
(`guidedfilter`), single-image restoration (`dehaze`), multi-reference
LAB harmonization (`harmonize`), PSNR/SSIM scoring with per-scene
eval-JSON support (`metrics`), and deterministic fixtures (`fixtures`).
The `desmoke` command exposes the batch pipeline.
"""

from .darkchannel import DcpParams, dark_channel, estimate_airlight, estimate_transmission
from .dehaze import DehazeParams, DehazeReport, dehaze_image, gamma_enhance, recover
from .guidedfilter import GuidedFilterParams, box_filter, guided_filter, refine_transmission
from .harmonize import (
    ChannelStats,
    HarmonizeParams,
    gaussian_blur,
    geometric_mean_reference,
    harmonize_pipeline,
    lab_stats,
    reinhard_transfer,
)
from .imagecore import clamp01, lab_to_rgb, luminance, rgb_to_lab
from .metrics import (
    BenchmarkSummary,
    SceneEval,
    ViewScore,
    aggregate,
    parse_eval_json,
    psnr,
    score_result_package,
    ssim,
)
from .scatter import composite, invert_exact, synth_field

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSummary",
    "ChannelStats",
    "DcpParams",
    "DehazeParams",
    "DehazeReport",
    "GuidedFilterParams",
    "HarmonizeParams",
    "SceneEval",
    "ViewScore",
    "aggregate",
    "box_filter",
    "clamp01",
    "composite",
    "dark_channel",
    "dehaze_image",
    "estimate_airlight",
    "estimate_transmission",
    "gamma_enhance",
    "gaussian_blur",
    "geometric_mean_reference",
    "guided_filter",
    "harmonize_pipeline",
    "invert_exact",
    "lab_stats",
    "lab_to_rgb",
    "luminance",
    "parse_eval_json",
    "psnr",
    "recover",
    "refine_transmission",
    "reinhard_transfer",
    "rgb_to_lab",
    "score_result_package",
    "ssim",
    "synth_field",
]
