"""Offline exporter: images -> per-patch ViT key-feature grids."""

__version__ = "0.1.0"

from .extractor import (
    DEFAULT_MODEL,
    DEFAULT_RESIZE,
    ExtractionJob,
    ExtractionReport,
    KeyFeatureExtractor,
    extract,
    load_model,
)
from .writer import write_feature_file
