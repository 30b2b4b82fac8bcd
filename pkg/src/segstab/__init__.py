"""Temporal stability measures and post-processing for video segmentation masks."""

from .corruption import (
    CorruptionSpec,
    QualificationCell,
    erode_directional,
    jitter_piecewise_affine,
    qualification_grid,
)
from .flow import occlusion_mask, warp_labels, warp_soft
from .measures import (
    ConsistencyConfig,
    MeasureReport,
    Normalization,
    count_boundary_pixels,
    d_cat,
    e_cons,
    e_pair,
    e_smooth,
    iou,
    recall,
)
from .postprocess import WgfConfig, temporal_gaussian_smooth, wgf_3d
from .stats import RatingsTable, Rating, StudyReport, aggregate_and_correlate, filter_workers, spearman
from .synth import make_occlusion_scene, make_translating_scene
from .types import (
    FlowField,
    Image,
    LabelMask,
    OcclusionMask,
    SoftMaskVolume,
    VideoSequence,
    argmax_merge,
    one_hot,
    one_hot_volume,
)

__version__ = "0.1.0"

__all__ = [
    "ConsistencyConfig",
    "CorruptionSpec",
    "FlowField",
    "Image",
    "LabelMask",
    "MeasureReport",
    "Normalization",
    "OcclusionMask",
    "QualificationCell",
    "Rating",
    "RatingsTable",
    "SoftMaskVolume",
    "StudyReport",
    "VideoSequence",
    "WgfConfig",
    "argmax_merge",
    "aggregate_and_correlate",
    "count_boundary_pixels",
    "d_cat",
    "e_cons",
    "e_pair",
    "e_smooth",
    "erode_directional",
    "filter_workers",
    "iou",
    "jitter_piecewise_affine",
    "make_occlusion_scene",
    "make_translating_scene",
    "occlusion_mask",
    "one_hot",
    "one_hot_volume",
    "qualification_grid",
    "recall",
    "spearman",
    "temporal_gaussian_smooth",
    "warp_labels",
    "warp_soft",
    "wgf_3d",
]
