"""Desk-scale class-agnostic detection metrics: AP at IoU thresholds, AR@100.

Follows the familiar protocol: per image, predictions are matched greedily
in descending score order, each taking the highest-IoU unmatched ground
truth at or above the threshold (ties resolved toward the lower GT index);
precision is interpolated at 101 recall points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annotations import AnnotationSet, RleMask, rle_decode
from .errors import ContractError, ValidationError

DEFAULT_THRESHOLDS = tuple(np.round(np.arange(0.50, 0.96, 0.05), 2))
MAX_DETECTIONS = 100


@dataclass(frozen=True)
class PrCurve:
    recall: np.ndarray
    precision: np.ndarray  # non-increasing, interpolated at the recall points
    ap: float


@dataclass(frozen=True)
class MatchResult:
    """Per-prediction TP flags (score-sorted) and matched GT ids, one image."""

    tp: np.ndarray
    matched_gt: list


def mask_iou(a: RleMask, b: RleMask) -> float:
    if a.size != b.size:
        raise ContractError(f"mask sizes differ: {a.size} vs {b.size}")
    ma, mb = rle_decode(a), rle_decode(b)
    union = np.logical_or(ma, mb).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(ma, mb).sum() / union)


def bbox_iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 0.0
    return float(inter / union)


def _iou_matrix(preds, gts, iou_type):
    m = np.zeros((len(preds), len(gts)))
    if iou_type == "mask":
        dp = [rle_decode(p.segmentation) for p in preds]
        dg = [rle_decode(g.segmentation) for g in gts]
        for i, pm in enumerate(dp):
            for j, gm in enumerate(dg):
                union = np.logical_or(pm, gm).sum()
                m[i, j] = np.logical_and(pm, gm).sum() / union if union else 0.0
    else:
        for i, p in enumerate(preds):
            for j, g in enumerate(gts):
                m[i, j] = bbox_iou(p.bbox, g.bbox)
    return m


def match_greedy(ious: np.ndarray, threshold: float) -> MatchResult:
    """Match score-ordered predictions (rows) to GTs (columns) at one threshold."""
    n_pred, n_gt = ious.shape
    taken = np.zeros(n_gt, dtype=bool)
    tp = np.zeros(n_pred, dtype=bool)
    matched = []
    for pi in range(n_pred):
        best_iou, best_gt = -1.0, -1
        for gi in range(n_gt):
            if taken[gi]:
                continue
            v = ious[pi, gi]
            if v >= threshold and v > best_iou:
                best_iou, best_gt = v, gi
        if best_gt >= 0:
            taken[best_gt] = True
            tp[pi] = True
            matched.append(best_gt)
    return MatchResult(tp=tp, matched_gt=matched)


def pr_curve(tp_sorted: np.ndarray, n_gt: int) -> PrCurve:
    """101-point interpolated precision/recall from globally score-sorted flags."""
    rec_pts = np.linspace(0.0, 1.0, 101)
    if n_gt == 0 or tp_sorted.size == 0:
        zeros = np.zeros(101)
        return PrCurve(recall=rec_pts, precision=zeros, ap=0.0)
    cum = np.cumsum(tp_sorted)
    rec = cum / n_gt
    prec = cum / np.arange(1, tp_sorted.size + 1)
    for i in range(prec.size - 2, -1, -1):
        prec[i] = max(prec[i], prec[i + 1])
    idx = np.searchsorted(rec, rec_pts, side="left")
    interp = np.where(idx < prec.size, prec[np.minimum(idx, prec.size - 1)], 0.0)
    return PrCurve(recall=rec_pts, precision=interp, ap=float(interp.mean()))


def evaluate(
    preds: AnnotationSet,
    gts: AnnotationSet,
    iou_thresholds=None,
    iou_type: str = "mask",
    max_dets: int = MAX_DETECTIONS,
) -> dict:
    """AP per threshold, their mean, and AR at ``max_dets`` detections."""
    if iou_type not in ("mask", "box"):
        raise ValidationError(f"iou_type must be 'mask' or 'box', got {iou_type!r}")
    thresholds = [float(t) for t in (iou_thresholds or DEFAULT_THRESHOLDS)]
    gt_dims = {im.id: (im.height, im.width) for im in gts.images}
    for im in preds.images:
        if im.id not in gt_dims:
            raise ValidationError(f"prediction image id {im.id} not present in ground truth")
        if (im.height, im.width) != gt_dims[im.id]:
            raise ValidationError(f"image {im.id}: size mismatch with ground truth")

    by_image_pred = {}
    for r in preds.records:
        by_image_pred.setdefault(r.image_id, []).append(r)
    by_image_gt = {}
    for r in gts.records:
        by_image_gt.setdefault(r.image_id, []).append(r)

    image_ids = sorted(gt_dims)
    n_gt_total = sum(len(v) for v in by_image_gt.values())

    pooled_scores = []
    pooled_tp = {t: [] for t in thresholds}
    matched_total = {t: 0 for t in thresholds}
    for img_idx, iid in enumerate(image_ids):
        p = by_image_pred.get(iid, [])
        g = by_image_gt.get(iid, [])
        order = sorted(range(len(p)), key=lambda i: (-p[i].score, i))[:max_dets]
        p = [p[i] for i in order]
        if not p:
            continue
        ious = _iou_matrix(p, g, iou_type)
        for t in thresholds:
            result = match_greedy(ious, t)
            pooled_tp[t].extend(result.tp.tolist())
            matched_total[t] += len(result.matched_gt)
        pooled_scores.extend((-r.score, img_idx, i) for i, r in enumerate(p))

    global_order = np.argsort(
        np.array(pooled_scores, dtype=[("s", float), ("im", int), ("i", int)]),
        kind="stable",
    ) if pooled_scores else np.empty(0, dtype=np.int64)

    per_threshold = {}
    for t in thresholds:
        flags = np.asarray(pooled_tp[t], dtype=bool)
        per_threshold[t] = pr_curve(flags[global_order], n_gt_total).ap
    ar = (
        float(np.mean([matched_total[t] / n_gt_total for t in thresholds]))
        if n_gt_total
        else 0.0
    )
    result = {
        "ap": float(np.mean(list(per_threshold.values()))),
        "ar100": ar,
        "per_threshold": {f"{t:.2f}": v for t, v in per_threshold.items()},
        "iou_type": iou_type,
    }
    if any(abs(t - 0.5) < 1e-9 for t in thresholds):
        result["ap50"] = per_threshold[min(thresholds, key=lambda t: abs(t - 0.5))]
    return result
