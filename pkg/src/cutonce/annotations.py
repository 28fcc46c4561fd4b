"""Class-agnostic annotation records with an exact uncompressed RLE codec.

Masks are run-length encoded in column-major scan order with alternating
runs of background then foreground; the first count may be zero so a mask
starting with foreground is representable.  Export produces canonical JSON:
fixed key order, shortest round-trip float formatting, UTF-8, LF.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

CATEGORY = {"id": 1, "name": "object"}


@dataclass(frozen=True)
class RleMask:
    size: tuple  # (height, width)
    counts: list

    def area(self) -> int:
        return int(sum(self.counts[1::2]))


@dataclass(frozen=True)
class ImageInfo:
    id: int
    file_name: str
    width: int
    height: int


@dataclass(frozen=True)
class AnnotationRecord:
    id: int
    image_id: int
    segmentation: RleMask
    bbox: tuple  # (x, y, w, h) pixels
    area: int
    score: float
    category_id: int = 1


@dataclass(frozen=True)
class AnnotationSet:
    images: list
    records: list
    info: dict | None = None


def rle_encode(mask: np.ndarray) -> RleMask:
    """Column-major run lengths, starting with a (possibly empty) zero-run."""
    h, w = mask.shape
    flat = np.ascontiguousarray(mask.ravel(order="F"), dtype=np.uint8)
    changes = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    counts = np.diff(bounds).tolist()
    if flat[0] == 1:
        counts.insert(0, 0)
    return RleMask(size=(h, w), counts=counts)


def rle_decode(rle: RleMask) -> np.ndarray:
    h, w = rle.size
    total = sum(rle.counts)
    if total != h * w:
        raise FormatError(f"run lengths sum to {total}, expected {h * w}")
    values = np.zeros(len(rle.counts), dtype=np.uint8)
    values[1::2] = 1
    flat = np.repeat(values, rle.counts)
    return flat.reshape((h, w), order="F").astype(bool)


def _record_dict(r: AnnotationRecord) -> dict:
    return {
        "id": r.id,
        "image_id": r.image_id,
        "category_id": r.category_id,
        "segmentation": {"size": list(r.segmentation.size), "counts": list(r.segmentation.counts)},
        "bbox": [float(v) for v in r.bbox],
        "area": r.area,
        "score": float(r.score),
    }


def export_annotations(aset: AnnotationSet, path) -> None:
    """Write the set as canonical UTF-8 JSON; identical inputs give identical bytes."""
    doc = {
        "images": [
            {"id": im.id, "file_name": im.file_name, "width": im.width, "height": im.height}
            for im in aset.images
        ],
        "annotations": [_record_dict(r) for r in aset.records],
        "categories": [dict(CATEGORY)],
    }
    if aset.info is not None:
        doc["info"] = aset.info
    text = json.dumps(doc, ensure_ascii=False, indent=1)
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write(text)
        fp.write("\n")


def _fail(path: str, message: str):
    raise FormatError(f"{path}: {message}")


def _require(obj, key, types, path: str):
    if key not in obj:
        _fail(f"{path}.{key}", "missing")
    v = obj[key]
    if not isinstance(v, types) or isinstance(v, bool):
        _fail(f"{path}.{key}", f"expected {types}, got {type(v).__name__}")
    return v


def import_annotations(path) -> AnnotationSet:
    """Read and validate an annotation file; violations name the JSON path."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fp:
        try:
            doc = json.load(fp)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        _fail("$", "top level must be an object")
    for key in ("images", "annotations", "categories"):
        if key not in doc or not isinstance(doc[key], list):
            _fail(f"$.{key}", "missing or not an array")

    images = []
    dims = {}
    for i, im in enumerate(doc["images"]):
        p = f"images[{i}]"
        if not isinstance(im, dict):
            _fail(p, "not an object")
        iid = _require(im, "id", int, p)
        if iid in dims:
            _fail(f"{p}.id", f"duplicate image id {iid}")
        name = _require(im, "file_name", str, p)
        width = _require(im, "width", int, p)
        height = _require(im, "height", int, p)
        if width < 1 or height < 1:
            _fail(p, f"degenerate dims {width}x{height}")
        dims[iid] = (height, width)
        images.append(ImageInfo(id=iid, file_name=name, width=width, height=height))

    records = []
    seen_ids = set()
    for i, ann in enumerate(doc["annotations"]):
        p = f"annotations[{i}]"
        if not isinstance(ann, dict):
            _fail(p, "not an object")
        rid = _require(ann, "id", int, p)
        if rid in seen_ids:
            _fail(f"{p}.id", f"duplicate annotation id {rid}")
        seen_ids.add(rid)
        image_id = _require(ann, "image_id", int, p)
        if image_id not in dims:
            _fail(f"{p}.image_id", f"unknown image id {image_id}")
        if _require(ann, "category_id", int, p) != 1:
            _fail(f"{p}.category_id", "must be 1 (class-agnostic)")
        seg = _require(ann, "segmentation", dict, p)
        size = _require(seg, "size", list, f"{p}.segmentation")
        counts = _require(seg, "counts", list, f"{p}.segmentation")
        if len(size) != 2 or not all(isinstance(v, int) and v > 0 for v in size):
            _fail(f"{p}.segmentation.size", f"bad size {size}")
        if tuple(size) != dims[image_id]:
            _fail(f"{p}.segmentation.size", f"size {size} != image dims {dims[image_id]}")
        if not counts or not all(isinstance(c, int) and c >= 0 for c in counts):
            _fail(f"{p}.segmentation.counts", "counts must be non-negative integers")
        if any(c == 0 for c in counts[1:]):
            _fail(f"{p}.segmentation.counts", "only the leading run may be empty")
        rle = RleMask(size=tuple(size), counts=list(counts))
        try:
            decoded = rle_decode(rle)
        except FormatError as exc:
            _fail(f"{p}.segmentation.counts", str(exc))
        area = _require(ann, "area", int, p)
        popcount = int(decoded.sum())
        if popcount == 0:
            _fail(f"{p}.segmentation", "empty mask")
        if area != popcount:
            _fail(f"{p}.area", f"area {area} != mask population {popcount}")
        bbox = _require(ann, "bbox", list, p)
        if len(bbox) != 4 or not all(isinstance(v, (int, float)) for v in bbox):
            _fail(f"{p}.bbox", f"bad bbox {bbox}")
        ys, xs = np.nonzero(decoded)
        tight = (int(xs.min()), int(ys.min()),
                 int(xs.max()) - int(xs.min()) + 1, int(ys.max()) - int(ys.min()) + 1)
        if tuple(float(v) for v in bbox) != tuple(float(v) for v in tight):
            _fail(f"{p}.bbox", f"bbox {bbox} is not the tight box {tight} of the mask")
        score = _require(ann, "score", (int, float), p)
        records.append(
            AnnotationRecord(
                id=rid,
                image_id=image_id,
                segmentation=rle,
                bbox=tuple(float(v) for v in bbox),
                area=area,
                score=float(score),
            )
        )
    info = doc.get("info")
    return AnnotationSet(images=images, records=records, info=info)
