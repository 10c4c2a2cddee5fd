"""PSNR/SSIM scoring, per-scene eval-JSON ingestion/emission, aggregation.

The eval-JSON schema (one file per scene):

    {
      "scene": "<name>",
      "views": [
        {"view_id": "<id>", "psnr": <number or "inf">, "ssim": <number>,
         "lpips": <number, optional>, ...extra fields preserved...},
        ...
      ],
      "average": {"psnr": ..., "ssim": ..., "lpips": ..., ...},
      ...extra scene-level fields preserved...
    }

``average`` is optional on ingest (recomputed from the views when
absent). Unknown fields are carried through opaquely so parse -> emit ->
parse is a fixpoint. Infinite PSNR (identical images) serializes as the
string "inf", never as a float sentinel. LPIPS is never computed here;
it is passed through when present in ingested files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.ndimage import correlate1d

from .imagecore import luminance, require_image
from .imgio import load_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


class EvalJsonError(ValueError):
    """Schema or parse failure in an eval-JSON file."""


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) over all samples; identical inputs give inf."""
    x = require_image(a, name="psnr first image")
    y = require_image(b, name="psnr second image")
    if x.shape != y.shape:
        raise ValueError(f"psnr: shape mismatch {x.shape} vs {y.shape}")
    if peak <= 0.0:
        raise ValueError(f"peak must be > 0, got {peak}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _ssim_window_kernel() -> np.ndarray:
    radius = SSIM_WINDOW // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / SSIM_SIGMA) ** 2)
    return k / k.sum()


def _windowed_mean_valid(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # constant-mode correlate then crop: interior rows/cols equal a
    # padding-free (valid) windowed mean
    r = len(kernel) // 2
    t = correlate1d(plane, kernel, axis=0, mode="constant")
    t = correlate1d(t, kernel, axis=1, mode="constant")
    return t[r:-r, r:-r]


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    h, w = x.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ValueError(f"ssim: image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    k = _ssim_window_kernel()
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2
    mu_x = _windowed_mean_valid(x, k)
    mu_y = _windowed_mean_valid(y, k)
    var_x = _windowed_mean_valid(x * x, k) - mu_x * mu_x
    var_y = _windowed_mean_valid(y * y, k) - mu_y * mu_y
    cov = _windowed_mean_valid(x * y, k) - mu_x * mu_y
    score = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(score.mean())


def ssim(a: np.ndarray, b: np.ndarray, mode: str = "per-channel") -> float:
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), dynamic range 1.

    Windows are valid-region only (no padding). For color images the
    default scores each RGB channel and averages; ``mode="luminance"``
    scores the Rec. 709 luminance plane instead.
    """
    x = require_image(a, name="ssim first image")
    y = require_image(b, name="ssim second image")
    if x.shape != y.shape:
        raise ValueError(f"ssim: shape mismatch {x.shape} vs {y.shape}")
    if x.ndim == 2:
        return _ssim_plane(x, y)
    if mode == "per-channel":
        return float(np.mean([_ssim_plane(x[..., c], y[..., c]) for c in range(3)]))
    if mode == "luminance":
        return _ssim_plane(luminance(x), luminance(y))
    raise ValueError(f"unknown ssim mode {mode!r}")


@dataclass
class ViewScore:
    view_id: str
    psnr: float
    ssim: float
    lpips: float | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class SceneEval:
    scene: str
    views: list[ViewScore]
    average: dict
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_views(cls, scene: str, views: Sequence[ViewScore]) -> "SceneEval":
        views = list(views)
        if not views:
            raise ValueError(f"scene {scene!r}: no views to average")
        average = {
            "psnr": float(np.mean([v.psnr for v in views])),
            "ssim": float(np.mean([v.ssim for v in views])),
        }
        if all(v.lpips is not None for v in views):
            average["lpips"] = float(np.mean([v.lpips for v in views]))
        return cls(scene=scene, views=views, average=average)


def _require_number(value, path: str, allow_inf_string: bool = False) -> float:
    if allow_inf_string and value == "inf":
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise EvalJsonError(f"{path}: expected a number, got {value!r}")
    return float(value)


def parse_eval_json(path: str | Path) -> SceneEval:
    """Load and validate one per-scene eval-JSON file.

    Strict on required fields (scene, views, and per-view view_id, psnr,
    ssim), tolerant of extras. Stored averages are kept verbatim for
    round-tripping; they are recomputed only when absent.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise EvalJsonError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise EvalJsonError(f"{path}: top level must be an object")

    where = str(path)
    if "scene" not in raw:
        raise EvalJsonError(f"{where}: missing required field 'scene'")
    scene = raw["scene"]
    if not isinstance(scene, str):
        raise EvalJsonError(f"{where}: 'scene' must be a string")
    if "views" not in raw:
        raise EvalJsonError(f"{where}: missing required field 'views'")
    raw_views = raw["views"]
    if not isinstance(raw_views, list):
        raise EvalJsonError(f"{where}: 'views' must be an array")
    if not raw_views:
        raise EvalJsonError(f"{where}: 'views' is empty")

    views = []
    for i, rec in enumerate(raw_views):
        vpath = f"{where}: views[{i}]"
        if not isinstance(rec, dict):
            raise EvalJsonError(f"{vpath}: expected an object")
        for key in ("view_id", "psnr", "ssim"):
            if key not in rec:
                raise EvalJsonError(f"{vpath}: missing required field {key!r}")
        view_id = rec["view_id"]
        if not isinstance(view_id, str):
            raise EvalJsonError(f"{vpath}.view_id: expected a string, got {view_id!r}")
        views.append(
            ViewScore(
                view_id=view_id,
                psnr=_require_number(rec["psnr"], f"{vpath}.psnr", allow_inf_string=True),
                ssim=_require_number(rec["ssim"], f"{vpath}.ssim"),
                lpips=(
                    _require_number(rec["lpips"], f"{vpath}.lpips") if "lpips" in rec else None
                ),
                extra={k: v for k, v in rec.items() if k not in ("view_id", "psnr", "ssim", "lpips")},
            )
        )

    if "average" in raw:
        raw_avg = raw["average"]
        if not isinstance(raw_avg, dict):
            raise EvalJsonError(f"{where}: 'average' must be an object")
        average = {}
        for key, value in raw_avg.items():
            if key in ("psnr", "ssim", "lpips"):
                average[key] = _require_number(
                    value, f"{where}: average.{key}", allow_inf_string=(key == "psnr")
                )
            else:
                average[key] = value
    else:
        average = SceneEval.from_views(scene, views).average

    extra = {k: v for k, v in raw.items() if k not in ("scene", "views", "average")}
    return SceneEval(scene=scene, views=views, average=average, extra=extra)


def _metric_json_value(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def scene_eval_to_dict(scene_eval: SceneEval) -> dict:
    out: dict = {"scene": scene_eval.scene, "views": []}
    for v in scene_eval.views:
        rec = {"view_id": v.view_id, "psnr": _metric_json_value(v.psnr), "ssim": v.ssim}
        if v.lpips is not None:
            rec["lpips"] = v.lpips
        rec.update(v.extra)
        out["views"].append(rec)
    out["average"] = {k: _metric_json_value(v) for k, v in scene_eval.average.items()}
    out.update(scene_eval.extra)
    return out


def emit_eval_json(scene_eval: SceneEval, path: str | Path | None = None) -> str:
    text = json.dumps(scene_eval_to_dict(scene_eval), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _index_views(directory: Path) -> dict[str, Path]:
    files: dict[str, Path] = {}
    for entry in sorted(directory.iterdir()):
        if not entry.is_file() or entry.suffix.lower() not in IMAGE_EXTENSIONS:
            continue
        stem = entry.stem
        if stem in files:
            raise ValueError(f"{directory}: ambiguous view id {stem!r} ({files[stem].name} and {entry.name})")
        files[stem] = entry
    return files


def score_result_package(
    result_dir: str | Path,
    reference_dir: str | Path,
    scene: str | None = None,
    ssim_mode: str = "per-channel",
) -> SceneEval:
    """Score a directory of result images against matching references.

    Views pair by filename stem (extensions may differ, e.g. .jpg results
    vs .png references). Any unmatched view or per-pair resolution
    mismatch raises with the offending ids named.
    """
    result_dir = Path(result_dir)
    reference_dir = Path(reference_dir)
    results = _index_views(result_dir)
    references = _index_views(reference_dir)
    missing_in_result = sorted(set(references) - set(results))
    missing_in_reference = sorted(set(results) - set(references))
    if missing_in_result or missing_in_reference:
        parts = []
        if missing_in_result:
            parts.append(f"missing in result dir: {missing_in_result}")
        if missing_in_reference:
            parts.append(f"missing in reference dir: {missing_in_reference}")
        raise ValueError("unmatched views: " + "; ".join(parts))
    if not results:
        raise ValueError(f"no images found in {result_dir}")

    views = []
    for view_id in sorted(results):
        res = load_image(results[view_id])
        ref = load_image(references[view_id])
        if res.shape != ref.shape:
            raise ValueError(
                f"view {view_id!r}: resolution mismatch {res.shape} vs {ref.shape}"
            )
        views.append(
            ViewScore(view_id=view_id, psnr=psnr(res, ref), ssim=ssim(res, ref, mode=ssim_mode))
        )
    return SceneEval.from_views(scene or result_dir.name, views)


@dataclass
class BenchmarkSummary:
    method: str
    scenes: list[str]
    per_scene: dict[str, dict]
    overall: dict

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "scenes": self.scenes,
            "per_scene": {
                s: {k: _metric_json_value(v) for k, v in m.items()}
                for s, m in self.per_scene.items()
            },
            "overall": {k: _metric_json_value(v) for k, v in self.overall.items()},
        }


def aggregate(
    scene_evals: Sequence[SceneEval],
    method: str,
    include: Sequence[str] | None = None,
    exclude: Sequence[str] | None = None,
) -> BenchmarkSummary:
    """Combine per-scene evals into one summary.

    The overall value of each metric is the unweighted mean of per-scene
    averages (every scene counts equally regardless of view count). LPIPS
    appears in the overall row only when every included scene carries it.
    """
    if not scene_evals:
        raise ValueError("aggregate: no scene evals given")
    names = [se.scene for se in scene_evals]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ValueError(f"aggregate: duplicate scene names {dupes}")
    by_name = {se.scene: se for se in scene_evals}

    selected = list(names)
    if include is not None:
        unknown = sorted(set(include) - set(names))
        if unknown:
            raise ValueError(f"aggregate: unknown scenes in include list {unknown}")
        selected = [n for n in selected if n in set(include)]
    if exclude is not None:
        unknown = sorted(set(exclude) - set(names))
        if unknown:
            raise ValueError(f"aggregate: unknown scenes in exclude list {unknown}")
        selected = [n for n in selected if n not in set(exclude)]
    if not selected:
        raise ValueError("aggregate: scene selection is empty")

    per_scene = {}
    for name in selected:
        avg = by_name[name].average
        row = {"psnr": avg["psnr"], "ssim": avg["ssim"]}
        if "lpips" in avg:
            row["lpips"] = avg["lpips"]
        per_scene[name] = row

    overall = {
        "psnr": float(np.mean([per_scene[n]["psnr"] for n in selected])),
        "ssim": float(np.mean([per_scene[n]["ssim"] for n in selected])),
    }
    if all("lpips" in per_scene[n] for n in selected):
        overall["lpips"] = float(np.mean([per_scene[n]["lpips"] for n in selected]))
    return BenchmarkSummary(method=method, scenes=selected, per_scene=per_scene, overall=overall)


def _fmt_metric(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return f"{value:.3f}"


def format_summary_table(summaries: Sequence[BenchmarkSummary]) -> str:
    """Method-per-row table with PSNR/SSIM/LPIPS columns."""
    width = max([len("method")] + [len(s.method) for s in summaries])
    lines = [f"{'method':<{width}}  {'PSNR':>8}  {'SSIM':>8}  {'LPIPS':>8}"]
    for s in summaries:
        lines.append(
            f"{s.method:<{width}}  {_fmt_metric(s.overall['psnr']):>8}  "
            f"{_fmt_metric(s.overall['ssim']):>8}  {_fmt_metric(s.overall.get('lpips')):>8}"
        )
    return "\n".join(lines)


def format_scene_table(summary: BenchmarkSummary) -> str:
    """Per-scene breakdown for one method, with the overall row last."""
    width = max([len("scene"), len("overall")] + [len(n) for n in summary.scenes])
    lines = [f"{'scene':<{width}}  {'PSNR':>8}  {'SSIM':>8}  {'LPIPS':>8}"]
    for name in summary.scenes:
        row = summary.per_scene[name]
        lines.append(
            f"{name:<{width}}  {_fmt_metric(row['psnr']):>8}  "
            f"{_fmt_metric(row['ssim']):>8}  {_fmt_metric(row.get('lpips')):>8}"
        )
    lines.append(
        f"{'overall':<{width}}  {_fmt_metric(summary.overall['psnr']):>8}  "
        f"{_fmt_metric(summary.overall['ssim']):>8}  {_fmt_metric(summary.overall.get('lpips')):>8}"
    )
    return "\n".join(lines)


def format_view_table(scene_eval: SceneEval) -> str:
    """Per-view scores for one scene, with the average row last."""
    width = max([len("view"), len("average")] + [len(v.view_id) for v in scene_eval.views])
    lines = [f"{'view':<{width}}  {'PSNR':>8}  {'SSIM':>8}"]
    for v in scene_eval.views:
        lines.append(f"{v.view_id:<{width}}  {_fmt_metric(v.psnr):>8}  {_fmt_metric(v.ssim):>8}")
    avg = scene_eval.average
    lines.append(
        f"{'average':<{width}}  {_fmt_metric(avg['psnr']):>8}  {_fmt_metric(avg['ssim']):>8}"
    )
    return "\n".join(lines)
