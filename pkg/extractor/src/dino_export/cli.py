"""``extract`` command: images in, feature grids out."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .extractor import DEFAULT_MODEL, DEFAULT_RESIZE, ExtractionJob, extract

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    ap = argparse.ArgumentParser(
        prog="extract",
        description="Export per-patch ViT key features as NPY grids with JSON sidecars",
    )
    ap.add_argument("--images", required=True, help="directory of input images")
    ap.add_argument("--out", required=True, help="output directory for .npy/.json pairs")
    ap.add_argument("--model", default=DEFAULT_MODEL, help="hub tag or local checkpoint dir")
    ap.add_argument("--resize", type=int, default=DEFAULT_RESIZE, help="square input size")
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--batch-size", type=int, default=4, dest="batch_size")
    args = ap.parse_args(argv)

    images = sorted(
        p for p in Path(args.images).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not images:
        print(f"no images under {args.images}", file=sys.stderr)
        return 2
    job = ExtractionJob(
        image_paths=images,
        out_dir=Path(args.out),
        model_tag=args.model,
        resize=args.resize,
        device=args.device,
        batch_size=args.batch_size,
    )
    report = extract(job)
    print(f"wrote {len(report.written)} feature files to {args.out}")
    if report.failed:
        print(f"{len(report.failed)} images failed:", file=sys.stderr)
        for path, msg in report.failed:
            print(f"  {path.name}: {msg}", file=sys.stderr)
    return 0 if report.written else 1


if __name__ == "__main__":
    sys.exit(main())
