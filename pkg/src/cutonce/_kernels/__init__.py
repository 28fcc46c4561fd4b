"""Kernel backend selection.

The hot per-image loops (row-wise top-k selection, fused temperature
scaling + thresholding, the boundary operator and component labeling) have a
compiled implementation in ``_core`` and a numpy fallback in ``_numpy``.  The
compiled module is chosen at import when present; set ``CUTONCE_NO_EXT=1`` to
force the fallback.  Both backends are bitwise-equivalent (see
tests/test_kernels.py) so the choice never changes results, only speed.
"""

import os

from . import _numpy

if os.environ.get("CUTONCE_NO_EXT"):
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _numpy
        BACKEND = "numpy"

mirror_upper = _impl.mirror_upper
topk_mean = _impl.topk_mean
tune_threshold = _impl.tune_threshold
boundary_field = _impl.boundary_field
label_components = _impl.label_components
