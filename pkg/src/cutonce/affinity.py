"""Density-tuned, contrast-thresholded affinity graph construction.

The chain is: cosine similarities -> local density (mean top-k cosine) ->
per-pair adaptive temperature scaling -> binarization against a contrast
threshold.  ``build_affinity`` runs the fused fast path; the individual
operations exist for composition and for checking the fused path against
them (they are exactly equal, not approximately).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import blas as _blas

from . import _kernels
from .errors import ContractError, ParameterError
from .feature_io import FeatureGrid

WEAK_EDGE = 1e-5


@dataclass(frozen=True)
class GraphParams:
    k: int = 10
    t0: float = 1.0
    alpha: float = 0.5
    tau_ncut: float = 0.15


@dataclass(frozen=True)
class DensityVector:
    """Per-node mean cosine similarity to its k nearest features."""

    rho: np.ndarray
    k: int


@dataclass(frozen=True)
class AffinityGraph:
    """Symmetric edge weights in {1.0, 1e-5} plus their row sums."""

    weights: np.ndarray
    degrees: np.ndarray
    n_nodes: int
    params: GraphParams | None = None


def cosine_matrix(grid: FeatureGrid) -> np.ndarray:
    """Pairwise cosine similarity of all patch vectors, exactly symmetric.

    Computed in float64 via a symmetric rank-k update of the upper triangle,
    then mirrored, so W[i, j] and W[j, i] are the same float.
    """
    if not grid.normalized:
        raise ContractError("cosine_matrix requires a normalized FeatureGrid")
    d = grid.depth
    k = grid.features.reshape(d, grid.n_nodes).astype(np.float64)
    # dsyrk fills one triangle of K^T K in Fortran order; transposing gives a
    # C-contiguous array with the upper triangle populated
    s = _blas.dsyrk(1.0, k, trans=1, lower=1).T
    return _kernels.mirror_upper(s)


def local_density(s: np.ndarray, k: int) -> DensityVector:
    """Mean of each row's k largest off-diagonal similarities."""
    n = s.shape[0]
    if not 1 <= k <= n - 1:
        raise ParameterError(f"k must be in [1, N-1]; got k={k}, N={n}")
    return DensityVector(rho=_kernels.topk_mean(s, k), k=k)


def _check_temperature(rho: np.ndarray, t0: float, alpha: float) -> None:
    # pair temperatures are affine in (rho_i + rho_j)/2, so the extreme pair
    # is attained at the extreme density node paired with itself
    idx = int(np.argmin(rho)) if alpha >= 0 else int(np.argmax(rho))
    t_min = t0 + alpha * (0.5 * (rho[idx] + rho[idx]))
    if not t_min > 0:
        raise ParameterError(
            f"non-positive temperature {t_min} for pair ({idx}, {idx}); "
            f"t0={t0}, alpha={alpha}, rho={rho[idx]}"
        )


def density_tuned_weights(s: np.ndarray, density: DensityVector, t0: float, alpha: float) -> np.ndarray:
    """Divide each similarity by its pair temperature t0 + alpha*(rho_i+rho_j)/2."""
    rho = density.rho
    _check_temperature(rho, t0, alpha)
    pair = rho[:, None] + rho[None, :]
    pair *= 0.5
    pair *= alpha
    pair += t0
    return s / pair


def contrast_threshold(w: np.ndarray, tau_ncut: float, params: GraphParams | None = None) -> AffinityGraph:
    """Binarize tuned weights to {1.0, 1e-5} and compute degrees.

    Degrees use the closed form count*1.0 + (N - count)*1e-5, which is the
    pinned deterministic reduction for two-valued rows.
    """
    if not np.isfinite(tau_ncut):
        raise ParameterError(f"tau_ncut must be finite, got {tau_ncut}")
    n = w.shape[0]
    keep = w >= tau_ncut
    weights = np.where(keep, 1.0, WEAK_EDGE)
    counts = keep.sum(axis=1, dtype=np.int64)
    degrees = counts * 1.0 + (n - counts) * WEAK_EDGE
    return AffinityGraph(weights=weights, degrees=degrees, n_nodes=n, params=params)


def build_affinity(grid: FeatureGrid, params: GraphParams | None = None) -> AffinityGraph:
    """Fused fast path; exactly equal to composing the four operations."""
    p = params or GraphParams()
    s = cosine_matrix(grid)
    density = local_density(s, p.k)
    _check_temperature(density.rho, p.t0, p.alpha)
    if not np.isfinite(p.tau_ncut):
        raise ParameterError(f"tau_ncut must be finite, got {p.tau_ncut}")
    n = s.shape[0]
    weights, counts = _kernels.tune_threshold(s, density.rho, p.t0, p.alpha, p.tau_ncut)
    degrees = counts * 1.0 + (n - counts) * WEAK_EDGE
    return AffinityGraph(weights=weights, degrees=degrees, n_nodes=n, params=p)
