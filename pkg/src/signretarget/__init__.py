"""Upper-body landmark retargeting and conditioning-image synthesis."""

__version__ = "0.1.0"

from .crop import (
    CropSpec,
    ProportionProfile,
    apply_crop,
    lower_median,
    proportion_profile,
    source_crop,
    target_crop,
)
from .geometry import (
    AxisScales,
    SimilarityTransform,
    fit_axis_scales,
    geometric_median,
    gpa_template,
    procrustes_distance,
    umeyama,
    weiszfeld,
)
from .landmarks import (
    LAYOUT,
    PART_NAMES,
    TOTAL_JOINTS,
    JointLayout,
    PartStatus,
    PoseFrame,
    PoseSequence,
    fill_missing,
    load_sequence,
    parse_sequence,
    root_point,
    save_sequence,
    serialize_sequence,
)
from .retarget import (
    PartCalibration,
    PartSpec,
    RetargetCalibration,
    calibrate,
    default_parts,
    retarget_part_frame,
    retarget_sequence,
    unify_frame,
)

__all__ = [
    "AxisScales",
    "CropSpec",
    "LAYOUT",
    "PART_NAMES",
    "PartCalibration",
    "PartSpec",
    "PartStatus",
    "PoseFrame",
    "PoseSequence",
    "ProportionProfile",
    "RetargetCalibration",
    "SimilarityTransform",
    "TOTAL_JOINTS",
    "JointLayout",
    "apply_crop",
    "calibrate",
    "default_parts",
    "fill_missing",
    "fit_axis_scales",
    "geometric_median",
    "gpa_template",
    "load_sequence",
    "lower_median",
    "parse_sequence",
    "procrustes_distance",
    "proportion_profile",
    "retarget_part_frame",
    "retarget_sequence",
    "root_point",
    "save_sequence",
    "serialize_sequence",
    "source_crop",
    "target_crop",
    "umeyama",
    "unify_frame",
    "weiszfeld",
    "__version__",
]
