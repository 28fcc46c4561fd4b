"""Single-pass normalized-cut instance mask generation on ViT feature grids."""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .affinity import (
    AffinityGraph,
    DensityVector,
    GraphParams,
    build_affinity,
    contrast_threshold,
    cosine_matrix,
    density_tuned_weights,
    local_density,
)
from .annotations import (
    AnnotationRecord,
    AnnotationSet,
    ImageInfo,
    RleMask,
    export_annotations,
    import_annotations,
    rle_decode,
    rle_encode,
)
from .errors import (
    ContractError,
    ConvergenceError,
    CutonceError,
    DataError,
    FormatError,
    ParameterError,
    ValidationError,
)
from .evaluation import bbox_iou, evaluate, mask_iou
from .feature_io import FeatureGrid, load_feature_grid, normalize, save_feature_grid
from .instances import (
    ComponentSet,
    InstanceMask,
    assign_scores,
    connected_components,
    extract_instances,
    rank_filter,
    upsample_mask,
)
from .pipeline import PipelineConfig, PipelineResult, process_grid
from .saliency import (
    Bipartition,
    SaliencyField,
    augment,
    boundary_field,
    compute_saliency,
    orient_and_split,
)
from .spectral import EigenResult, solve_fiedler
