import numpy as np
import pytest
import torch
from PIL import Image

from dino_export import ExtractionJob, KeyFeatureExtractor, extract
from dino_export.cli import main


@pytest.fixture(scope="module")
def tiny_model():
    """Randomly initialized ViT with the production layer structure."""
    from transformers import ViTConfig, ViTModel

    torch.manual_seed(0)
    cfg = ViTConfig(
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        image_size=32,
        patch_size=8,
        num_channels=3,
    )
    model = ViTModel(cfg, add_pooling_layer=False)
    model.eval()
    return model


def save_image(path, w, h, seed=0):
    rng = np.random.default_rng(seed)
    Image.fromarray(rng.integers(0, 255, (h, w, 3), dtype=np.uint8)).save(path)


class TestKeyCapture:
    def test_geometry(self, tiny_model):
        ex = KeyFeatureExtractor(tiny_model, resize=32, model_tag="tiny")
        px = ex.preprocess(Image.new("RGB", (100, 60)))
        feats = ex.keys_for_batch(px[None])
        assert feats.shape == (1, 32, 4, 4)  # hidden, 32/8 grid

    def test_cls_token_excluded_and_layout(self, tiny_model):
        ex = KeyFeatureExtractor(tiny_model, resize=32, model_tag="tiny")
        px = ex.preprocess(Image.new("RGB", (32, 32), color=(40, 90, 200)))
        feats = ex.keys_for_batch(px[None])
        # drive the model again and read the raw hook capture
        with torch.no_grad():
            tiny_model(px[None], interpolate_pos_encoding=True)
        captured = ex._captured
        assert captured.shape == (1, 17, 32)  # CLS + 16 patches
        spatial = captured[0, 1:, :].reshape(4, 4, 32).permute(2, 0, 1)
        assert torch.equal(feats[0], spatial)

    def test_rejects_bad_resize(self, tiny_model):
        with pytest.raises(ValueError):
            KeyFeatureExtractor(tiny_model, resize=30, model_tag="tiny")

    def test_deterministic(self, tiny_model, tmp_path):
        p = tmp_path / "img.png"
        save_image(p, 50, 40, seed=3)
        ex = KeyFeatureExtractor(tiny_model, resize=32, model_tag="tiny")
        with Image.open(p) as img:
            a = ex.keys_for_batch(ex.preprocess(img)[None]).numpy()
        with Image.open(p) as img:
            b = ex.keys_for_batch(ex.preprocess(img)[None]).numpy()
        assert np.array_equal(a, b)


class TestExtractJob:
    def test_writes_loadable_pairs(self, tiny_model, tmp_path):
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        save_image(img_dir / "a.png", 100, 60, seed=1)
        save_image(img_dir / "b.jpg", 32, 32, seed=2)
        out = tmp_path / "feats"
        job = ExtractionJob(
            image_paths=sorted(img_dir.iterdir()), out_dir=out, model_tag="tiny", resize=32
        )
        report = extract(job, model=tiny_model)
        assert len(report.written) == 2 and not report.failed
        assert not list(out.glob("*.tmp"))

        # the primary component is the consumer contract
        from cutonce import load_feature_grid, normalize

        grid = load_feature_grid(out / "a.npy")
        assert grid.features.shape == (32, 4, 4)
        assert grid.orig_width == 100 and grid.orig_height == 60
        assert grid.resized_width == 32 and grid.patch_size == 8
        assert grid.image_id == "a"
        normalized = normalize(grid)
        assert normalized.normalized

    def test_non_square_recorded(self, tiny_model, tmp_path):
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        save_image(img_dir / "wide.png", 200, 80)
        out = tmp_path / "feats"
        extract(
            ExtractionJob(image_paths=[img_dir / "wide.png"], out_dir=out,
                          model_tag="tiny", resize=32),
            model=tiny_model,
        )
        import json

        meta = json.loads((out / "wide.json").read_text())
        assert (meta["orig_width"], meta["orig_height"]) == (200, 80)
        assert meta["resized_width"] == meta["resized_height"] == 32
        assert meta["model"] == "tiny"

    def test_bad_image_reported_job_continues(self, tiny_model, tmp_path):
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        save_image(img_dir / "ok.png", 40, 40)
        (img_dir / "broken.png").write_bytes(b"not an image")
        out = tmp_path / "feats"
        report = extract(
            ExtractionJob(image_paths=sorted(img_dir.iterdir()), out_dir=out,
                          model_tag="tiny", resize=32),
            model=tiny_model,
        )
        assert len(report.written) == 1
        assert len(report.failed) == 1 and report.failed[0][0].name == "broken.png"

    def test_batching_matches_single(self, tiny_model, tmp_path):
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        for i in range(3):
            save_image(img_dir / f"i{i}.png", 30 + i, 40, seed=i)
        out1, out2 = tmp_path / "b1", tmp_path / "b3"
        paths = sorted(img_dir.iterdir())
        extract(ExtractionJob(paths, out1, model_tag="tiny", resize=32, batch_size=1),
                model=tiny_model)
        extract(ExtractionJob(paths, out2, model_tag="tiny", resize=32, batch_size=3),
                model=tiny_model)
        for p in out1.glob("*.npy"):
            a = np.load(p)
            b = np.load(out2 / p.name)
            assert np.allclose(a, b, atol=1e-6)


class TestCli:
    def test_end_to_end(self, tiny_model, tmp_path, monkeypatch, capsys):
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        save_image(img_dir / "x.png", 64, 48)
        monkeypatch.setattr("dino_export.extractor.load_model", lambda tag, device: tiny_model)
        rc = main(["--images", str(img_dir), "--out", str(tmp_path / "o"),
                   "--model", "tiny", "--resize", "32"])
        assert rc == 0
        assert (tmp_path / "o" / "x.npy").exists()
        assert "wrote 1 feature files" in capsys.readouterr().out

    def test_empty_dir(self, tmp_path):
        (tmp_path / "none").mkdir()
        assert main(["--images", str(tmp_path / "none"), "--out", str(tmp_path / "o")]) == 2
