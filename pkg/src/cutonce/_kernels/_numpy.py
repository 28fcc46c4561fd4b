"""Pure-numpy kernel implementations.

These are the reference semantics for the compiled extension: both backends
must produce bitwise-identical outputs.  Where a result depends on floating
point evaluation order, the order is pinned here (and mirrored in the
extension) rather than left to whatever a library reduction happens to do.
"""

import numpy as np
from scipy import ndimage

# neighbor offsets in pinned accumulation order
OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
OFFSETS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)


def mirror_upper(s):
    """Copy the strict upper triangle onto the lower one, in place."""
    n = s.shape[0]
    iu = np.triu_indices(n, 1)
    s[(iu[1], iu[0])] = s[iu]
    return s


def topk_mean(s, k):
    """Mean of the k largest off-diagonal entries of each row.

    The k values are summed serially in descending numeric order so the
    result does not depend on how the selection broke ties.
    """
    n = s.shape[0]
    buf = s.copy()
    np.fill_diagonal(buf, -2.0)  # below any cosine, never selected
    top = np.partition(buf, n - k, axis=1)[:, n - k:]
    top.sort(axis=1)
    acc = top[:, k - 1].copy()
    for j in range(k - 2, -1, -1):
        acc += top[:, j]
    return acc / k


def tune_threshold(s, rho, t0, alpha, tau):
    """Temperature-scale similarities and binarize against tau.

    Returns (weights, counts): weights has every entry in {1.0, 1e-5} and
    counts[i] is the number of entries >= tau in row i.
    """
    pair = rho[:, None] + rho[None, :]
    pair *= 0.5
    pair *= alpha
    pair += t0
    w = s / pair
    keep = w >= tau
    out = np.where(keep, 1.0, 1e-5)
    counts = keep.sum(axis=1, dtype=np.int64)
    return out, counts


def boundary_field(raw, neighborhood):
    """Mean absolute difference to the 4- or 8-neighborhood, replicate-padded."""
    h, w = raw.shape
    padded = np.pad(raw, 1, mode="edge")
    offsets = OFFSETS_8 if neighborhood == 8 else OFFSETS_4
    acc = np.zeros_like(raw)
    for dy, dx in offsets:
        acc += np.abs(raw - padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w])
    return acc / neighborhood


def label_components(fg):
    """4-connected component labels, ids assigned in raster first-encounter order.

    Returns (labels int32 [H, W], count).  Background is 0.
    """
    labels, n = ndimage.label(fg, structure=_FOUR_CONN)
    labels = labels.astype(np.int32, copy=False)
    if n == 0:
        return labels, 0
    # canonicalize: relabel by order of first appearance in raster scan
    flat = labels.ravel()
    first = np.full(n + 1, flat.size, dtype=np.int64)
    nz = np.flatnonzero(flat)
    np.minimum.at(first, flat[nz], nz)
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[1 + order] = np.arange(1, n + 1, dtype=np.int32)
    return remap[labels], n
