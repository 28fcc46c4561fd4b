"""Command line entry points: generate, eval, inspect."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import __version__
from .annotations import (
    AnnotationRecord,
    AnnotationSet,
    ImageInfo,
    export_annotations,
    import_annotations,
    rle_encode,
)
from .errors import CutonceError, ParameterError
from .evaluation import evaluate
from .feature_io import load_feature_grid
from .pipeline import PipelineConfig, process_grid

log = logging.getLogger("cutonce")

_CONFIG_KEYS = {
    "k": int,
    "t0": float,
    "alpha": float,
    "tau_ncut": float,
    "tau": float,  # filter threshold; stored as tau_filter
    "neighborhood": int,
    "solver": str,
    "workers": int,
}


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("CUTONCE_LOG", "info").lower(), logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _parse_config_file(path: Path) -> dict:
    """Flat key=value lines; '#' starts a comment; unknown keys are an error."""
    out = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParameterError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ParameterError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value.strip())
        except ValueError as exc:
            raise ParameterError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return out


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key=value config file; flags override it")
    p.add_argument("--k", type=int, help="neighbors for the local density")
    p.add_argument("--t0", type=float, help="base temperature")
    p.add_argument("--alpha", type=float, help="density modulation strength")
    p.add_argument("--tau-ncut", type=float, dest="tau_ncut", help="edge contrast threshold")
    p.add_argument("--tau", type=float, help="cumulative saliency share kept by the filter")
    p.add_argument("--neighborhood", type=int, choices=(4, 8), help="boundary neighborhood")
    p.add_argument("--solver", choices=("dense", "iterative"), help="eigensolver backend")
    p.add_argument("--workers", type=int, help="images processed in parallel")


def _resolve_config(args) -> PipelineConfig:
    values = {}
    if args.config:
        values.update(_parse_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "tau" in values:
        values["tau_filter"] = values.pop("tau")
    names = {f.name for f in dataclass_fields(PipelineConfig)}
    return PipelineConfig(**{k: v for k, v in values.items() if k in names}).validate()


def _process_one(path_str: str, config_dict: dict):
    """Worker body: returns a picklable per-image summary."""
    cfg = PipelineConfig(**config_dict)
    grid = load_feature_grid(path_str)
    result = process_grid(grid, cfg)
    masks = [
        {
            "counts": rle_encode(m.pixel_mask).counts,
            "bbox": [float(v) for v in m.bbox],
            "area": int(m.pixel_mask.sum()),
            "score": m.score,
        }
        for m in result.instances
    ]
    return {
        "image_id": grid.image_id,
        "width": grid.orig_width,
        "height": grid.orig_height,
        "masks": masks,
        "stages": result.stage_seconds,
    }


def cmd_generate(args) -> int:
    cfg = _resolve_config(args)
    features_dir = Path(args.features)
    files = sorted(features_dir.glob("*.npy"))
    if not files:
        log.error("no .npy feature files under %s", features_dir)
        return 2
    cfg_dict = cfg.as_dict()

    outcomes = [None] * len(files)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_process_one, str(f), cfg_dict) for f in files]
            for i, fut in enumerate(futures):
                try:
                    outcomes[i] = fut.result()
                except CutonceError as exc:
                    outcomes[i] = exc
    else:
        for i, f in enumerate(files):
            try:
                outcomes[i] = _process_one(str(f), cfg_dict)
            except CutonceError as exc:
                outcomes[i] = exc

    images, records, timing, failures = [], [], [], []
    next_image, next_ann = 1, 1
    for f, out in zip(files, outcomes):
        if isinstance(out, Exception):
            failures.append((f, out))
            log.error("%s: %s", f.name, out)
            continue
        info = ImageInfo(
            id=next_image, file_name=out["image_id"], width=out["width"], height=out["height"]
        )
        images.append(info)
        from .annotations import RleMask

        for m in out["masks"]:
            records.append(
                AnnotationRecord(
                    id=next_ann,
                    image_id=next_image,
                    segmentation=RleMask(size=(out["height"], out["width"]), counts=m["counts"]),
                    bbox=tuple(m["bbox"]),
                    area=m["area"],
                    score=m["score"],
                )
            )
            next_ann += 1
        timing.append({"file": f.name, "image_id": out["image_id"], "stages": out["stages"]})
        next_image += 1

    if not images:
        log.error("no feature file could be processed")
        return 2

    aset = AnnotationSet(
        images=images,
        records=records,
        info={"generator": "cutonce", "version": __version__, "config": cfg_dict},
    )
    out_path = Path(args.out)
    export_annotations(aset, out_path)
    timing_path = Path(args.timing_log) if args.timing_log else out_path.with_suffix(
        out_path.suffix + ".timing.json"
    )
    with open(timing_path, "w", encoding="utf-8") as fp:
        json.dump({"images": timing}, fp, indent=1)
        fp.write("\n")
    log.info(
        "wrote %d annotations for %d images to %s", len(records), len(images), out_path
    )
    if failures:
        print(
            f"{len(failures)} of {len(files)} files failed:", file=sys.stderr
        )
        for f, exc in failures:
            print(f"  {f.name}: {exc}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    preds = import_annotations(args.pred)
    gts = import_annotations(args.gt)
    thresholds = None
    if args.thresholds:
        thresholds = [float(t) for t in args.thresholds.split(",")]
    metrics = evaluate(preds, gts, iou_thresholds=thresholds, iou_type=args.iou_type)
    table = [
        ("AP@0.50", metrics.get("ap50")),
        ("AP (mean)", metrics["ap"]),
        (f"AR@{100}", metrics["ar100"]),
    ]
    print(f"{'metric':<12}{'value':>8}")
    for name, value in table:
        if value is not None:
            print(f"{name:<12}{value:>8.4f}")
    if args.out:
        doc = {"ap50": metrics.get("ap50"), "ap": metrics["ap"], "ar100": metrics["ar100"],
               "per_threshold": metrics["per_threshold"], "iou_type": metrics["iou_type"]}
        with open(args.out, "w", encoding="utf-8") as fp:
            json.dump(doc, fp, indent=1)
            fp.write("\n")
    return 0


def _to_gray(arr: np.ndarray) -> "np.ndarray":
    arr = np.asarray(arr, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    if hi > lo:
        arr = (arr - lo) / (hi - lo)
    else:
        arr = np.zeros_like(arr)
    return (arr * 255).astype(np.uint8)


def _save_gray(arr: np.ndarray, path: Path):
    from PIL import Image

    Image.fromarray(_to_gray(arr), mode="L").save(path)


def cmd_inspect(args) -> int:
    cfg = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = load_feature_grid(args.feature_file)
    result = process_grid(grid, cfg, keep_graph=True)
    h, w = grid.grid_height, grid.grid_width

    _save_gray(result.saliency.raw, out_dir / "fiedler.png")
    _save_gray(result.saliency.boundary, out_dir / "boundary.png")
    _save_gray(result.saliency.augmented, out_dir / "augmented.png")
    _save_gray(result.split.foreground.astype(np.float64), out_dir / "foreground.png")

    from .instances import connected_components

    comps = connected_components(result.split.foreground, result.split.oriented.reshape(h, w))
    _save_gray(comps.labels.astype(np.float64), out_dir / "components.png")

    graph = result.graph
    _save_gray(graph.weights, out_dir / "weights.png")
    kk = grid.features.reshape(grid.depth, grid.n_nodes).astype(np.float64)
    s = kk.T @ kk
    for name, node in (
        ("center", (h // 2) * w + w // 2),
        ("quarter", (h // 4) * w + w // 4),
        ("corner", 0),
    ):
        _save_gray(s[node].reshape(h, w), out_dir / f"similarity_{name}.png")
    log.info("wrote inspection images to %s", out_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutonce",
        description="Single-pass normalized-cut instance masks from feature grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit annotations for a directory of feature files")
    g.add_argument("--features", required=True, help="directory of .npy feature files")
    g.add_argument("--out", required=True, help="output annotation JSON path")
    g.add_argument("--timing-log", dest="timing_log", help="per-image stage timing JSON path")
    _add_config_flags(g)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("eval", help="score predictions against ground truth")
    e.add_argument("--pred", required=True, help="prediction annotation JSON")
    e.add_argument("--gt", required=True, help="ground-truth annotation JSON")
    e.add_argument("--out", help="metrics JSON output path")
    e.add_argument("--iou-type", dest="iou_type", choices=("mask", "box"), default="mask")
    e.add_argument("--thresholds", help="comma-separated IoU thresholds")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="dump intermediate maps as grayscale images")
    i.add_argument("feature_file", help="one .npy feature file")
    i.add_argument("--out", required=True, help="output directory for images")
    _add_config_flags(i)
    i.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CutonceError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
