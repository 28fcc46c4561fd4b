"""Per-patch key-feature extraction from a ViT's last attention block.

The "key" projections (pre-softmax, all heads concatenated) of the final
attention layer are captured with a forward hook, the CLS token is dropped,
and the spatial tokens are reshaped to the patch grid.  One NPY tensor of
shape (hidden, grid_h, grid_w) plus a JSON sidecar is written per image.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .writer import write_feature_file

log = logging.getLogger("dino_export")

DEFAULT_MODEL = "facebook/dino-vitb8"
DEFAULT_RESIZE = 480

# ImageNet statistics, the preprocessing the backbone was trained with
_MEAN = (0.485, 0.456, 0.406)
_STD = (0.229, 0.224, 0.225)


@dataclass
class ExtractionJob:
    image_paths: list
    out_dir: Path
    model_tag: str = DEFAULT_MODEL
    resize: int = DEFAULT_RESIZE
    device: str = "cpu"
    batch_size: int = 4


@dataclass
class ExtractionReport:
    written: list = field(default_factory=list)
    failed: list = field(default_factory=list)  # (path, message)


def load_model(model_tag: str, device: str = "cpu"):
    """Pretrained ViT from a hub tag or a local checkpoint directory."""
    from transformers import ViTModel

    model = ViTModel.from_pretrained(model_tag, add_pooling_layer=False)
    model.eval()
    return model.to(device)


def _last_key_projection(model):
    """The final block's key Linear, across transformers module layouts."""
    if hasattr(model, "layers"):  # transformers >= 5
        return model.layers[-1].attention.k_proj
    return model.encoder.layer[-1].attention.attention.key


class KeyFeatureExtractor:
    """Captures last-block key projections for batches of images."""

    def __init__(self, model, resize: int = DEFAULT_RESIZE, model_tag: str = DEFAULT_MODEL,
                 device: str = "cpu"):
        self.model = model.eval().to(device)
        self.resize = resize
        self.model_tag = model_tag
        self.device = device
        self.patch_size = int(model.config.patch_size)
        self.hidden = int(model.config.hidden_size)
        if resize % self.patch_size != 0:
            raise ValueError(
                f"resize {resize} is not a multiple of the patch size {self.patch_size}"
            )
        self.grid = resize // self.patch_size
        self._captured = None
        _last_key_projection(self.model).register_forward_hook(self._grab)

    def _grab(self, module, inputs, output):
        self._captured = output.detach()

    def preprocess(self, image: Image.Image) -> torch.Tensor:
        rgb = image.convert("RGB").resize((self.resize, self.resize), Image.BILINEAR)
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
        arr = (arr - np.array(_MEAN, dtype=np.float32)) / np.array(_STD, dtype=np.float32)
        return torch.from_numpy(arr.transpose(2, 0, 1))

    @torch.no_grad()
    def keys_for_batch(self, pixel_values: torch.Tensor) -> torch.Tensor:
        """Key projections [B, hidden, grid, grid]; CLS token removed."""
        self._captured = None
        self.model(pixel_values.to(self.device), interpolate_pos_encoding=True)
        tokens = self._captured
        if tokens is None:
            raise RuntimeError("key-projection hook did not fire")
        b, n_tokens, dim = tokens.shape
        expected = self.grid * self.grid + 1
        if n_tokens != expected or dim != self.hidden:
            raise RuntimeError(
                f"unexpected token layout {tokens.shape}, wanted (*, {expected}, {self.hidden})"
            )
        spatial = tokens[:, 1:, :]  # drop CLS
        return spatial.reshape(b, self.grid, self.grid, dim).permute(0, 3, 1, 2).contiguous()


def extract(job: ExtractionJob, model=None) -> ExtractionReport:
    """Run the job, writing one NPY + sidecar per decodable image."""
    report = ExtractionReport()
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if model is None:
        model = load_model(job.model_tag, job.device)
    ex = KeyFeatureExtractor(model, resize=job.resize, model_tag=job.model_tag,
                             device=job.device)

    batch, metas = [], []

    def flush():
        if not batch:
            return
        feats = ex.keys_for_batch(torch.stack(batch))
        for feat, (path, ow, oh) in zip(feats, metas):
            target = out_dir / (Path(path).stem + ".npy")
            write_feature_file(
                target,
                feat.cpu().numpy().astype(np.float32),
                image_id=Path(path).stem,
                orig_width=ow,
                orig_height=oh,
                patch_size=ex.patch_size,
                model=job.model_tag,
            )
            report.written.append(target)
        batch.clear()
        metas.clear()

    for path in job.image_paths:
        try:
            with Image.open(path) as img:
                ow, oh = img.size
                batch.append(ex.preprocess(img))
                metas.append((path, ow, oh))
        except OSError as exc:
            log.error("%s: %s", path, exc)
            report.failed.append((Path(path), str(exc)))
            continue
        if len(batch) >= job.batch_size:
            flush()
    flush()
    return report
