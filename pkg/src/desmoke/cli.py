"""Batch command-line front end.

Commands: synth, dehaze, harmonize, eval, aggregate, fixtures. Every
command operates on directories of views; per-file failures are logged
and counted but never abort the batch. Exit status is 0 only when every
file processed cleanly (2 for usage/configuration errors, 1 when some
files failed).

Option precedence: command-line flags > config file (--config, a flat
JSON object keyed by option name) > built-in defaults. The environment
variable DESMOKE_WORKERS overrides the worker count from any source.
Outputs are written atomically, and parallel runs produce byte-identical
results to serial ones.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import fixtures as fixture_gen
from . import metrics, scatter
from .darkchannel import DcpParams
from .dehaze import DehazeParams, dehaze_image
from .guidedfilter import GuidedFilterParams
from .harmonize import HarmonizeParams, harmonize_pipeline
from .imgio import atomic_write_bytes, encode_jpeg_bytes, encode_png_bytes, load_image

log = logging.getLogger("desmoke")

WORKERS_ENV = "DESMOKE_WORKERS"


class UsageError(Exception):
    """Bad flags, config, or inputs; maps to exit status 2."""


REQUIRED = object()  # sentinel default for options that must be supplied


def _parse_airlight(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--airlight expects R,G,B; got {text!r}")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"--airlight {text!r}: {exc}") from exc
    try:
        scatter.validate_airlight(values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return values


def _parse_t_spec(text: str) -> tuple[str, dict]:
    kind, _, arg = text.partition(":")
    try:
        if kind == "constant":
            parsed = kind, {"value": float(arg)}
        elif kind in ("ramp", "horizontal-ramp"):
            start, stop = (float(p) for p in arg.split(","))
            parsed = "horizontal-ramp", {"start": start, "stop": stop}
        elif kind == "radial":
            center, edge = (float(p) for p in arg.split(","))
            parsed = kind, {"center": center, "edge": edge}
        else:
            raise UsageError(f"--t {text!r}: unknown field kind {kind!r}")
    except ValueError as exc:
        raise UsageError(f"--t {text!r}: {exc}") from exc
    for name, value in parsed[1].items():
        if not 0.0 < value <= 1.0:
            raise UsageError(f"--t {text!r}: {name}={value} outside (0, 1]")
    return parsed


def _list_views(directory: Path) -> dict[str, Path]:
    if not directory.is_dir():
        raise UsageError(f"not a directory: {directory}")
    views: dict[str, Path] = {}
    for entry in sorted(directory.iterdir()):
        if entry.is_file() and entry.suffix.lower() in metrics.IMAGE_EXTENSIONS:
            views[entry.stem] = entry
    return views


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError(f"config {path}: top level must be a JSON object")
    return raw


def _resolve_options(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge CLI > config file > defaults; reject unknown config keys."""
    config = _load_config(getattr(args, "config", None))
    unknown = sorted(set(config) - set(defaults))
    if unknown:
        raise UsageError(f"config: unknown option(s) {unknown}")
    resolved = {}
    for name, default in defaults.items():
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            resolved[name] = cli_value
        elif name in config:
            resolved[name] = config[name]
        else:
            resolved[name] = default
    missing = [k for k, v in resolved.items() if v is REQUIRED]
    if missing:
        raise UsageError(f"missing required option(s): {sorted(missing)}")
    log.info("effective config: %s", json.dumps(resolved, default=str, sort_keys=True))
    return resolved


def _worker_count(resolved: int | None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"{WORKERS_ENV}={env!r} is not an integer") from exc
    if resolved is not None:
        return max(1, int(resolved))
    return min(8, os.cpu_count() or 1)


def _run_batch(items: list, fn, workers: int) -> int:
    """Apply fn to each item, isolating failures; returns failure count."""
    failures = 0

    def _safe(item):
        try:
            fn(item)
            return None
        except Exception as exc:  # noqa: BLE001 - per-file isolation is the contract
            return exc

    if workers <= 1 or len(items) <= 1:
        outcomes = [(item, _safe(item)) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(zip(items, pool.map(_safe, items)))
    for item, exc in outcomes:
        if exc is not None:
            failures += 1
            log.error("failed %s: %s", item, exc)
    return failures


def _save_npy_atomic(path: Path, arr: np.ndarray) -> None:
    buf = io.BytesIO()
    np.save(buf, arr)
    atomic_write_bytes(path, buf.getvalue())


SYNTH_DEFAULTS = {
    "input": REQUIRED,
    "output": REQUIRED,
    "t": REQUIRED,
    "airlight": REQUIRED,
    "workers": None,
}


def cmd_synth(args: argparse.Namespace) -> int:
    opts = _resolve_options(args, SYNTH_DEFAULTS)
    kind, params = _parse_t_spec(opts["t"])
    airlight = _parse_airlight(opts["airlight"]) if isinstance(opts["airlight"], str) else opts["airlight"]
    views = _list_views(Path(opts["input"]))
    if not views:
        raise UsageError(f"no input images in {opts['input']}")
    out_dir = Path(opts["output"])
    out_dir.mkdir(parents=True, exist_ok=True)

    def _one(view_id: str) -> None:
        clean = load_image(views[view_id])
        field = scatter.synth_field(kind, clean.shape[:2], **params)
        smoky = scatter.composite(clean, field, airlight)
        atomic_write_bytes(out_dir / f"{view_id}.png", encode_png_bytes(smoky))
        _save_npy_atomic(out_dir / f"{view_id}.t.npy", field)
        sidecar = {"airlight": list(airlight), "t_field": {"kind": kind, **params}}
        atomic_write_bytes(
            out_dir / f"{view_id}.airlight.json", (json.dumps(sidecar, indent=2) + "\n").encode()
        )

    failures = _run_batch(sorted(views), _one, _worker_count(opts["workers"]))
    log.info("synth: %d views, %d failures", len(views), failures)
    return 1 if failures else 0


DEHAZE_DEFAULTS = {
    "input": REQUIRED,
    "output": REQUIRED,
    "patch_size": 15,
    "omega": 0.95,
    "percentile": 0.001,
    "radius": 61,
    "epsilon": 1e-3,
    "t_min": 0.1,
    "gamma": 0.5,
    "airlight": "",
    "report": False,
    "workers": None,
}


def cmd_dehaze(args: argparse.Namespace) -> int:
    opts = _resolve_options(args, DEHAZE_DEFAULTS)
    override = _parse_airlight(opts["airlight"]) if opts["airlight"] else None
    try:
        params = DehazeParams(
            dcp=DcpParams(
                patch_size=int(opts["patch_size"]),
                omega=float(opts["omega"]),
                airlight_percentile=float(opts["percentile"]),
            ),
            gf=GuidedFilterParams(radius=int(opts["radius"]), epsilon=float(opts["epsilon"])),
            t_min=float(opts["t_min"]),
            gamma=float(opts["gamma"]),
            airlight_override=override,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    log.info(
        "dehaze params: omega=%g patch=%d radius=%d epsilon=%g t_min=%g gamma=%g airlight=%s",
        params.dcp.omega,
        params.dcp.patch_size,
        params.gf.radius,
        params.gf.epsilon,
        params.t_min,
        params.gamma,
        "estimated" if override is None else f"override {list(override)}",
    )
    views = _list_views(Path(opts["input"]))
    if not views:
        raise UsageError(f"no input images in {opts['input']}")
    out_dir = Path(opts["output"])
    out_dir.mkdir(parents=True, exist_ok=True)

    def _one(view_id: str) -> None:
        smoky = load_image(views[view_id])
        restored, report = dehaze_image(smoky, params)
        atomic_write_bytes(out_dir / f"{view_id}.png", encode_png_bytes(restored))
        if opts["report"]:
            atomic_write_bytes(
                out_dir / f"{view_id}.report.json",
                (json.dumps(report.as_dict(), indent=2) + "\n").encode(),
            )

    failures = _run_batch(sorted(views), _one, _worker_count(opts["workers"]))
    log.info("dehaze: %d views, %d failures", len(views), failures)
    return 1 if failures else 0


HARMONIZE_DEFAULTS = {
    "source": REQUIRED,
    "donor": REQUIRED,
    "output": REQUIRED,
    "sigma": 0.35,
    "floor_epsilon": 1e-6,
    "quality": 95,
    "subsampling": "4:2:0",
    "workers": None,
}


def cmd_harmonize(args: argparse.Namespace) -> int:
    opts = _resolve_options(args, HARMONIZE_DEFAULTS)
    try:
        params = HarmonizeParams(
            floor_epsilon=float(opts["floor_epsilon"]),
            blur_sigma=float(opts["sigma"]),
            jpeg_quality=int(opts["quality"]),
            chroma_subsampling=opts["subsampling"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    donor_dirs = [Path(p) for p in opts["donor"]]
    if not donor_dirs:
        raise UsageError("at least one --donor directory is required")
    source_views = _list_views(Path(opts["source"]))
    if not source_views:
        raise UsageError(f"no source images in {opts['source']}")
    branches = {str(d): _list_views(d) for d in donor_dirs}
    source_ids = set(source_views)
    mismatches = []
    for name, branch_views in branches.items():
        missing = sorted(source_ids - set(branch_views))
        extra = sorted(set(branch_views) - source_ids)
        if missing or extra:
            mismatches.append(f"{name}: missing {missing}, unexpected {extra}")
    if mismatches:
        raise UsageError("donor view sets do not match the source: " + "; ".join(mismatches))
    out_dir = Path(opts["output"])
    out_dir.mkdir(parents=True, exist_ok=True)

    def _one(view_id: str) -> None:
        src = load_image(source_views[view_id])
        donors = [load_image(branches[str(d)][view_id]) for d in donor_dirs]
        result = harmonize_pipeline(src, donors, params)
        atomic_write_bytes(
            out_dir / f"{view_id}.jpg",
            encode_jpeg_bytes(result, quality=params.jpeg_quality, subsampling=params.chroma_subsampling),
        )

    failures = _run_batch(sorted(source_views), _one, _worker_count(opts["workers"]))
    log.info("harmonize: %d views, %d failures", len(source_views), failures)
    return 1 if failures else 0


EVAL_DEFAULTS = {
    "result": REQUIRED,
    "reference": REQUIRED,
    "scene": "",
    "output": "",
    "ssim_mode": "per-channel",
}


def cmd_eval(args: argparse.Namespace) -> int:
    opts = _resolve_options(args, EVAL_DEFAULTS)
    try:
        scene_eval = metrics.score_result_package(
            opts["result"],
            opts["reference"],
            scene=opts["scene"] or None,
            ssim_mode=opts["ssim_mode"],
        )
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from exc
    if opts["output"]:
        atomic_write_bytes(Path(opts["output"]), metrics.emit_eval_json(scene_eval).encode())
    print(metrics.format_view_table(scene_eval))
    return 0


AGGREGATE_DEFAULTS = {
    "inputs": REQUIRED,
    "method": REQUIRED,
    "scenes": "",
    "exclude": "",
    "output": "",
}


def cmd_aggregate(args: argparse.Namespace) -> int:
    opts = _resolve_options(args, AGGREGATE_DEFAULTS)
    try:
        evals = [metrics.parse_eval_json(p) for p in opts["inputs"]]
        include = [s for s in opts["scenes"].split(",") if s] or None
        exclude = [s for s in opts["exclude"].split(",") if s] or None
        summary = metrics.aggregate(evals, opts["method"], include=include, exclude=exclude)
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from exc
    if opts["output"]:
        atomic_write_bytes(
            Path(opts["output"]), (json.dumps(summary.as_dict(), indent=2) + "\n").encode()
        )
    print(metrics.format_scene_table(summary))
    return 0


FIXTURES_DEFAULTS = {
    "output": REQUIRED,
    "views": 10,
    "height": 48,
    "width": 64,
    "seed": 0,
    "kind": "textured-noise",
    "donors": 4,
    "eval_scenes": 0,
}

_DONOR_CASTS = [
    ("warm", (1.15, 1.0, 0.85), (0.02, 0.0, 0.0)),
    ("cool", (0.9, 0.95, 1.1), (0.0, 0.0, 0.02)),
    ("bright", (1.1, 1.1, 1.1), (0.05, 0.05, 0.05)),
    ("dim", (0.85, 0.85, 0.85), (0.0, 0.0, 0.0)),
]


def cmd_fixtures(args: argparse.Namespace) -> int:
    opts = _resolve_options(args, FIXTURES_DEFAULTS)
    out_dir = Path(opts["output"])
    n_donors = int(opts["donors"])
    if not 0 <= n_donors <= len(_DONOR_CASTS):
        raise UsageError(f"--donors must lie in [0, {len(_DONOR_CASTS)}]")
    clean_dir = out_dir / "clean"
    clean_dir.mkdir(parents=True, exist_ok=True)
    for i in range(int(opts["views"])):
        spec = fixture_gen.FixtureSpec(
            seed=int(opts["seed"]) + i,
            height=int(opts["height"]),
            width=int(opts["width"]),
            kind=opts["kind"],
        )
        clean = fixture_gen.make_clean_scene(spec)
        atomic_write_bytes(clean_dir / f"view_{i:03d}.png", encode_png_bytes(clean))
        for name, gains, offset in _DONOR_CASTS[:n_donors]:
            branch_dir = out_dir / f"donor_{name}"
            branch_dir.mkdir(parents=True, exist_ok=True)
            variant = fixture_gen.make_donor_variant(clean, gains, offset)
            atomic_write_bytes(branch_dir / f"view_{i:03d}.png", encode_png_bytes(variant))
    for i in range(int(opts["eval_scenes"])):
        eval_dir = out_dir / "eval"
        eval_dir.mkdir(parents=True, exist_ok=True)
        scene = fixture_gen.make_eval_scene(f"scene_{i:02d}", int(opts["views"]), seed=int(opts["seed"]) + i)
        atomic_write_bytes(eval_dir / f"scene_{i:02d}.json", metrics.emit_eval_json(scene).encode())
    log.info("fixtures written under %s", out_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="desmoke", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    def _common(p):
        p.add_argument("--config", help="JSON config file (flat object keyed by option name)")

    p = sub.add_parser("synth", help="composite smoke onto clean images")
    _common(p)
    p.add_argument("--input", help="directory of clean images")
    p.add_argument("--output", help="output directory")
    p.add_argument("--t", help="transmission field: constant:V | ramp:A,B | radial:C,E")
    p.add_argument("--airlight", help="airlight color R,G,B in (0,1]")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("dehaze", help="restore smoky images")
    _common(p)
    p.add_argument("--input", help="directory of smoky images")
    p.add_argument("--output", help="output directory")
    p.add_argument("--patch-size", dest="patch_size", type=int)
    p.add_argument("--omega", type=float)
    p.add_argument("--percentile", type=float, help="airlight candidate fraction")
    p.add_argument("--radius", type=int, help="guided filter radius (0 skips refinement)")
    p.add_argument("--epsilon", type=float, help="guided filter regularization")
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--airlight", help="override the airlight estimator with R,G,B")
    p.add_argument("--report", action="store_const", const=True, help="write per-view diagnostics")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_dehaze)

    p = sub.add_parser("harmonize", help="statistics-match source renders to a donor ensemble")
    _common(p)
    p.add_argument("--source", help="directory of source renders")
    p.add_argument("--donor", action="append", help="donor branch directory (repeatable)")
    p.add_argument("--output", help="output directory for harmonized JPEGs")
    p.add_argument("--sigma", type=float, help="final Gaussian smoothing sigma")
    p.add_argument("--floor-epsilon", dest="floor_epsilon", type=float)
    p.add_argument("--quality", type=int, help="JPEG quality")
    p.add_argument("--subsampling", choices=["4:4:4", "4:2:2", "4:2:0"])
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_harmonize)

    p = sub.add_parser("eval", help="score a result directory against references")
    _common(p)
    p.add_argument("--result", help="directory of result images")
    p.add_argument("--reference", help="directory of reference images")
    p.add_argument("--scene", help="scene name (default: result directory name)")
    p.add_argument("--output", help="write the per-scene eval JSON here")
    p.add_argument("--ssim-mode", dest="ssim_mode", choices=["per-channel", "luminance"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("aggregate", help="combine per-scene eval JSONs into one summary")
    _common(p)
    p.add_argument("inputs", nargs="*", default=None, help="per-scene eval JSON files")
    p.add_argument("--method", help="method name for the summary row")
    p.add_argument("--scenes", help="comma-separated include list")
    p.add_argument("--exclude", help="comma-separated exclude list")
    p.add_argument("--output", help="write the summary JSON here")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("fixtures", help="write a procedural demo corpus")
    _common(p)
    p.add_argument("--output", help="fixture tree root")
    p.add_argument("--views", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--kind", choices=["gradient", "checker", "textured-noise"])
    p.add_argument("--donors", type=int, help="number of donor branches (0-4)")
    p.add_argument("--eval-scenes", dest="eval_scenes", type=int, help="also write eval JSON fixtures")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
