"""Loading, validation and normalization of per-image patch feature grids.

On disk a grid is a version-1.0 NPY tensor of shape (D, H, W) in
little-endian float32, with a JSON sidecar ``<stem>.json`` carrying the image
geometry.  In memory features stay float32 (the disk truth); linear algebra
downstream promotes to float64.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, ValidationError

_MAGIC = b"\x93NUMPY"
_SIDECAR_KEYS = (
    "image_id",
    "orig_width",
    "orig_height",
    "resized_width",
    "resized_height",
    "patch_size",
    "model",
)


@dataclass(frozen=True)
class FeatureGrid:
    """A (D, H, W) patch feature tensor plus the geometry of its image."""

    image_id: str
    features: np.ndarray
    patch_size: int
    orig_width: int
    orig_height: int
    resized_width: int
    resized_height: int
    normalized: bool = False

    def __post_init__(self):
        f = self.features
        if f.ndim != 3:
            raise ValidationError(f"features must be 3-dimensional, got shape {f.shape}")
        d, h, w = f.shape
        if d < 1 or h < 2 or w < 2:
            raise ValidationError(f"grid too small: D={d}, H={h}, W={w} (need D>=1, H,W>=2)")
        for name in ("patch_size", "orig_width", "orig_height", "resized_width", "resized_height"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be a positive integer")
        if self.resized_width != w * self.patch_size or self.resized_height != h * self.patch_size:
            raise ValidationError(
                f"resized dims ({self.resized_width}x{self.resized_height}) do not match "
                f"grid {w}x{h} at patch_size {self.patch_size}"
            )
        f.flags.writeable = False

    @property
    def depth(self) -> int:
        return self.features.shape[0]

    @property
    def grid_height(self) -> int:
        return self.features.shape[1]

    @property
    def grid_width(self) -> int:
        return self.features.shape[2]

    @property
    def n_nodes(self) -> int:
        return self.grid_height * self.grid_width


def _read_npy_f4(path: Path) -> np.ndarray:
    with open(path, "rb") as fp:
        magic = fp.read(6)
        if magic != _MAGIC:
            raise FormatError(f"{path}: not an NPY file (bad magic {magic!r})")
        ver = fp.read(2)
        if ver != b"\x01\x00":
            raise FormatError(f"{path}: unsupported NPY version {tuple(ver)}, need 1.0")
        (hlen,) = struct.unpack("<H", fp.read(2))
        header = fp.read(hlen)
        if len(header) != hlen:
            raise FormatError(f"{path}: truncated header")
        try:
            meta = ast.literal_eval(header.decode("latin1"))
        except (ValueError, SyntaxError) as exc:
            raise FormatError(f"{path}: malformed header dict: {exc}") from exc
        if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
            raise FormatError(f"{path}: header keys {sorted(meta)} invalid")
        if meta["descr"] != "<f4":
            raise FormatError(f"{path}: dtype {meta['descr']!r} unsupported, need '<f4'")
        if meta["fortran_order"] is not False:
            raise FormatError(f"{path}: fortran_order must be False")
        shape = meta["shape"]
        if not (
            isinstance(shape, tuple)
            and len(shape) == 3
            and all(isinstance(v, int) and v >= 0 for v in shape)
        ):
            raise FormatError(f"{path}: shape {shape} is not a (D, H, W) triple")
        count = int(np.prod(shape))
        data = fp.read(count * 4)
        if len(data) != count * 4:
            raise FormatError(f"{path}: payload truncated ({len(data)} of {count * 4} bytes)")
        return np.frombuffer(data, dtype="<f4").reshape(shape)


def load_feature_grid(path) -> FeatureGrid:
    """Read one NPY tensor plus its JSON sidecar into an unnormalized grid."""
    path = Path(path)
    features = _read_npy_f4(path)
    sidecar = path.with_suffix(".json")
    try:
        with open(sidecar, "r", encoding="utf-8") as fp:
            meta = json.load(fp)
    except FileNotFoundError:
        raise FormatError(f"{path}: sidecar {sidecar.name} is missing") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{sidecar}: invalid JSON: {exc}") from exc
    missing = [k for k in _SIDECAR_KEYS if k not in meta]
    if missing:
        raise FormatError(f"{sidecar}: missing keys {missing}")
    if not np.isfinite(features).all():
        bad = int(np.flatnonzero(~np.isfinite(features))[0])
        raise DataError(f"{path}: non-finite value at flat offset {bad}")
    return FeatureGrid(
        image_id=str(meta["image_id"]),
        features=features,
        patch_size=int(meta["patch_size"]),
        orig_width=int(meta["orig_width"]),
        orig_height=int(meta["orig_height"]),
        resized_width=int(meta["resized_width"]),
        resized_height=int(meta["resized_height"]),
        normalized=False,
    )


def save_feature_grid(grid: FeatureGrid, path, model: str = "unknown") -> None:
    """Write the grid in the canonical on-disk form (<f4 NPY + sidecar)."""
    path = Path(path)
    arr = np.ascontiguousarray(grid.features, dtype="<f4")
    with open(path, "wb") as fp:
        np.lib.format.write_array(fp, arr, version=(1, 0))
    sidecar = {
        "image_id": grid.image_id,
        "orig_width": grid.orig_width,
        "orig_height": grid.orig_height,
        "resized_width": grid.resized_width,
        "resized_height": grid.resized_height,
        "patch_size": grid.patch_size,
        "model": model,
    }
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fp:
        json.dump(sidecar, fp, indent=1)
        fp.write("\n")


def normalize(grid: FeatureGrid) -> FeatureGrid:
    """Scale every patch vector to unit L2 norm.

    Norms are computed in float64; the result is stored back as float32.
    Idempotent up to float32 rounding.  A vector with norm below 1e-12 is a
    broken extractor output and raises DataError.
    """
    feats = grid.features.astype(np.float64)
    norms = np.sqrt((feats * feats).sum(axis=0))
    if (norms < 1e-12).any():
        flat = int(np.flatnonzero(norms < 1e-12)[0])
        y, x = divmod(flat, grid.grid_width)
        raise DataError(f"patch {flat} (row {y}, col {x}) has near-zero feature norm")
    feats /= norms[None, :, :]
    return replace(grid, features=feats.astype(np.float32), normalized=True)
