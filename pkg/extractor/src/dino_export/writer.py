"""Atomic NPY + JSON sidecar writes in the feature-grid container format."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np


def write_feature_file(path, features, *, image_id, orig_width, orig_height,
                       patch_size, model):
    """Write `<stem>.npy` (v1.0, <f4, C order) and `<stem>.json`, atomically.

    Both files land via temp-then-rename so readers never observe a partial
    pair member.
    """
    path = Path(path)
    if features.ndim != 3:
        raise ValueError(f"features must be (D, H, W), got {features.shape}")
    _, h, w = features.shape
    arr = np.ascontiguousarray(features, dtype="<f4")
    tmp_npy = path.with_suffix(".npy.tmp")
    with open(tmp_npy, "wb") as fp:
        np.lib.format.write_array(fp, arr, version=(1, 0))
        fp.flush()
        os.fsync(fp.fileno())
    sidecar = {
        "image_id": image_id,
        "orig_width": int(orig_width),
        "orig_height": int(orig_height),
        "resized_width": w * patch_size,
        "resized_height": h * patch_size,
        "patch_size": int(patch_size),
        "model": model,
    }
    tmp_json = path.with_suffix(".json.tmp")
    with open(tmp_json, "w", encoding="utf-8") as fp:
        json.dump(sidecar, fp, indent=1)
        fp.write("\n")
        fp.flush()
        os.fsync(fp.fileno())
    os.replace(tmp_npy, path)
    os.replace(tmp_json, path.with_suffix(".json"))
