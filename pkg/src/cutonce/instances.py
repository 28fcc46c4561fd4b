"""Foreground decomposition, saliency-ranked filtering, and mask finishing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParameterError
from .feature_io import FeatureGrid
from .saliency import Bipartition


@dataclass(frozen=True)
class ComponentSet:
    """4-connected foreground components with per-component saliency sums.

    ``labels`` assigns 0 to background and 1..n in raster first-encounter
    order; ``order`` lists component ids by descending sum (ties: lower id).
    """

    labels: np.ndarray
    sums: np.ndarray
    order: np.ndarray


@dataclass(frozen=True)
class InstanceMask:
    patch_mask: np.ndarray
    pixel_mask: np.ndarray
    bbox: tuple  # (x, y, w, h) pixels
    saliency_sum: float
    rank: int
    score: float


def connected_components(foreground: np.ndarray, saliency: np.ndarray) -> ComponentSet:
    """Label maximal 4-connected regions and sum the saliency over each."""
    labels, n = _kernels.label_components(foreground)
    if n == 0:
        return ComponentSet(
            labels=labels, sums=np.empty(0), order=np.empty(0, dtype=np.int64)
        )
    sums = np.bincount(labels.ravel(), weights=saliency.ravel(), minlength=n + 1)[1:]
    order = np.argsort(-sums, kind="stable") + 1
    return ComponentSet(labels=labels, sums=sums, order=order)


def rank_filter(components: ComponentSet, tau: float = 0.95) -> list:
    """Shortest descending-sum prefix whose share of the total reaches tau.

    Sums are clamped at zero for the ratio (a mean-split can make trailing
    components slightly negative); if everything clamps to zero the largest
    component by area is kept alone.
    """
    if not 0.0 < tau < 1.0:
        raise ParameterError(f"tau must be in (0, 1), got {tau}")
    n = components.sums.size
    if n == 0:
        return []
    clamped = np.maximum(components.sums, 0.0)
    total = clamped.sum()
    if total <= 0.0:
        areas = np.bincount(components.labels.ravel())[1:]
        return [int(np.argmax(areas)) + 1]
    selected = []
    acc = 0.0
    for cid in components.order:
        selected.append(int(cid))
        acc += clamped[cid - 1]
        if acc / total >= tau:
            break
    return selected


def _linear_coords(n_src: int, n_dst: int):
    # half-pixel-centered sampling: dst center i maps to (i + .5)*scale - .5
    s = (np.arange(n_dst, dtype=np.float64) + 0.5) * (n_src / n_dst) - 0.5
    s = np.clip(s, 0.0, n_src - 1.0)
    i0 = np.floor(s).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_src - 1)
    return i0, i1, s - i0


def upsample_mask(patch_mask: np.ndarray, grid: FeatureGrid) -> np.ndarray:
    """Bilinear interpolation of the {0,1} patch map to the original image size.

    Thresholded at 0.5 with ties counted as foreground.
    """
    src = patch_mask.astype(np.float64)
    oh, ow = grid.orig_height, grid.orig_width
    y0, y1, fy = _linear_coords(src.shape[0], oh)
    x0, x1, fx = _linear_coords(src.shape[1], ow)
    rows = src[y0, :] * (1.0 - fy)[:, None] + src[y1, :] * fy[:, None]
    out = rows[:, x0] * (1.0 - fx)[None, :] + rows[:, x1] * fx[None, :]
    return out >= 0.5


def assign_scores(n_masks: int) -> np.ndarray:
    """Linearly decreasing confidences: 1.0 for the first mask, 0.5 for the last."""
    if n_masks < 1:
        raise ParameterError(f"n_masks must be >= 1, got {n_masks}")
    if n_masks == 1:
        return np.array([1.0])
    k = np.arange(n_masks, dtype=np.float64)
    return 1.0 - k / (2 * n_masks - 2)


def mask_bbox(mask: np.ndarray) -> tuple:
    """Tight (x, y, w, h) box of a non-empty boolean mask."""
    ys, xs = np.nonzero(mask)
    x, y = int(xs.min()), int(ys.min())
    return (x, y, int(xs.max()) - x + 1, int(ys.max()) - y + 1)


def extract_instances(split: Bipartition, grid: FeatureGrid, tau: float = 0.95) -> list:
    """Turn an oriented bipartition into ranked, scored instance masks.

    Components are selected by the cumulative-saliency filter, upsampled to
    the original resolution, and any mask that vanishes under interpolation
    is dropped before scores are assigned.
    """
    h, w = grid.grid_height, grid.grid_width
    sal = split.oriented.reshape(h, w)
    comps = connected_components(split.foreground, sal)
    kept = []
    for cid in rank_filter(comps, tau):
        patch_mask = comps.labels == cid
        pixel_mask = upsample_mask(patch_mask, grid)
        if not pixel_mask.any():
            continue
        kept.append((patch_mask, pixel_mask, float(comps.sums[cid - 1])))
    if not kept:
        return []
    scores = assign_scores(len(kept))
    return [
        InstanceMask(
            patch_mask=pm,
            pixel_mask=px,
            bbox=mask_bbox(px),
            saliency_sum=ssum,
            rank=rank,
            score=float(scores[rank]),
        )
        for rank, (pm, px, ssum) in enumerate(kept)
    ]
