"""Shared builders for synthetic grids, graphs, and annotation sets."""

import numpy as np
import pytest

from cutonce import FeatureGrid
from cutonce.affinity import AffinityGraph


def planted_grid(h, w, d, blobs, obj_cos=0.45, noise=0.01, seed=0, patch=8, orig=None):
    """Feature grid with a background cluster and one blob per object cluster.

    Object directions share a common component (pairwise cosine ``obj_cos``)
    and are orthogonal to the background; every blob is a filled rectangle
    (y, x, height, width) in patch coordinates.  Returns (grid, int mask)
    where mask holds 0 for background and 1..n per blob.
    """
    rng = np.random.default_rng(seed)
    nobj = len(blobs)
    q, _ = np.linalg.qr(rng.standard_normal((d, nobj + 2)))
    a, b = np.sqrt(obj_cos), np.sqrt(1.0 - obj_cos)
    dirs = np.stack([q[:, 0]] + [a * q[:, 1] + b * q[:, 2 + i] for i in range(nobj)])
    mask = np.zeros((h, w), dtype=int)
    for bi, (y, x, bh, bw) in enumerate(blobs):
        mask[y:y + bh, x:x + bw] = bi + 1
    feats = dirs[mask.ravel()].T.reshape(d, h, w)
    feats = feats + noise * rng.standard_normal((d, h, w))
    ow, oh = orig if orig else (w * patch, h * patch)
    grid = FeatureGrid(
        image_id=f"planted-{seed}",
        features=feats.astype(np.float32),
        patch_size=patch,
        orig_width=ow,
        orig_height=oh,
        resized_width=w * patch,
        resized_height=h * patch,
    )
    return grid, mask


def random_blobs(rng, h, w, nobj, lo=2, hi=4, gap=2):
    """Place nobj non-adjacent rectangles; returns list of (y, x, bh, bw) or None."""
    mask = np.zeros((h, w), dtype=bool)
    out = []
    for _ in range(nobj):
        bh = int(rng.integers(lo, hi + 1))
        bw = int(rng.integers(lo, hi + 1))
        for _ in range(300):
            y = int(rng.integers(0, h - bh + 1))
            x = int(rng.integers(0, w - bw + 1))
            y0, x0 = max(0, y - gap), max(0, x - gap)
            if mask[y0:y + bh + gap, x0:x + bw + gap].any():
                continue
            mask[y:y + bh, x:x + bw] = True
            out.append((y, x, bh, bw))
            break
        else:
            return None
    return out


def random_graph(n, seed, nblocks=2, flip_frac=0.01):
    """Binary {1.0, 1e-5} affinity with planted blocks plus symmetric noise flips."""
    rng = np.random.default_rng(seed)
    w = np.full((n, n), 1e-5)
    idx = rng.permutation(n)
    cuts = np.sort(rng.choice(np.arange(1, n), nblocks - 1, replace=False)) if nblocks > 1 else []
    for part in np.split(idx, cuts):
        w[np.ix_(part, part)] = 1.0
    flips = rng.random((n, n)) < flip_frac
    flips = np.triu(flips, 1)
    flips = flips | flips.T
    w[flips] = np.where(w[flips] == 1.0, 1e-5, 1.0)
    np.fill_diagonal(w, 1.0)
    d = (w == 1.0).sum(axis=1) * 1.0 + (w != 1.0).sum(axis=1) * 1e-5
    return AffinityGraph(weights=w, degrees=d, n_nodes=n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
