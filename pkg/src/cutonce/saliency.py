"""Boundary-augmented saliency field and foreground/background orientation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractError, ParameterError


@dataclass(frozen=True)
class SaliencyField:
    """Reshaped eigenvector (raw), its boundary field, and their difference."""

    raw: np.ndarray
    boundary: np.ndarray
    augmented: np.ndarray
    neighborhood: int


@dataclass(frozen=True)
class Bipartition:
    """Oriented saliency vector split at its mean into foreground/background."""

    oriented: np.ndarray
    foreground: np.ndarray
    threshold: float
    flipped: bool
    flip_reason: str  # "corner_rule" | "maxmin_rule" | "none"


def boundary_field(raw: np.ndarray, neighborhood: int = 8) -> np.ndarray:
    """Mean absolute difference of each cell to its 4- or 8-neighborhood.

    The map is replicate-padded: edge cells reuse the adjacent row/column,
    corner positions the adjacent corner cell.
    """
    if raw.ndim != 2 or raw.shape[0] < 2 or raw.shape[1] < 2:
        raise ParameterError(f"map must be at least 2x2, got shape {raw.shape}")
    if neighborhood not in (4, 8):
        raise ParameterError(f"neighborhood must be 4 or 8, got {neighborhood}")
    return _kernels.boundary_field(np.ascontiguousarray(raw, dtype=np.float64), neighborhood)


def augment(raw: np.ndarray, boundary: np.ndarray) -> np.ndarray:
    """Subtract the boundary field from the raw map, elementwise."""
    if raw.shape != boundary.shape:
        raise ContractError(f"shape mismatch: raw {raw.shape} vs boundary {boundary.shape}")
    return raw - boundary


def compute_saliency(fiedler: np.ndarray, h: int, w: int, neighborhood: int = 8) -> SaliencyField:
    raw = np.ascontiguousarray(fiedler, dtype=np.float64).reshape(h, w)
    bnd = boundary_field(raw, neighborhood)
    return SaliencyField(raw=raw, boundary=bnd, augmented=raw - bnd, neighborhood=neighborhood)


def orient_and_split(raw: np.ndarray, augmented: np.ndarray) -> Bipartition:
    """Pick the foreground side and split the augmented map at its mean.

    The flip decision is made on the raw (pre-augmentation) map: the
    augmentation carves deep negative rings around small objects, which
    would invert the magnitude test, and erodes corner regions, which would
    distort the corner count.  Two checks, first match wins:

    1. the above-mean side of the raw map holds at least three of the four
       corner cells (foregrounds rarely do) -> flip;
    2. the raw maximum is smaller in magnitude than the raw minimum -> flip.

    The split itself happens on the (possibly negated) augmented map against
    its own mean; entries exactly at the mean fall to background.
    """
    if raw.shape != augmented.shape:
        raise ContractError(f"shape mismatch: raw {raw.shape} vs augmented {augmented.shape}")
    if not (np.isfinite(raw).all() and np.isfinite(augmented).all()):
        raise ContractError("maps must be finite")
    candidate = raw > raw.mean()
    corners = (
        int(candidate[0, 0])
        + int(candidate[0, -1])
        + int(candidate[-1, 0])
        + int(candidate[-1, -1])
    )
    if corners >= 3:
        flipped, reason = True, "corner_rule"
    elif abs(raw.max()) < abs(raw.min()):
        flipped, reason = True, "maxmin_rule"
    else:
        flipped, reason = False, "none"
    v = -augmented if flipped else augmented
    threshold = float(v.mean())
    return Bipartition(
        oriented=v.ravel(),
        foreground=v > threshold,
        threshold=threshold,
        flipped=flipped,
        flip_reason=reason,
    )
