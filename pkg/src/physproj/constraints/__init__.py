"""Transforms between physical and normalized space, and constraint sets."""

from physproj.constraints.ltp import (
    ELEMENTARY_CHARGE,
    INPUT_NAMES,
    K_BOLTZMANN,
    OUTPUT_NAMES,
    TORR_TO_PA,
    LtpSchema,
    generate_synthetic_ltp,
    load_ltp_csv,
    write_ltp_csv,
)
from physproj.constraints.sets import ConstraintSet, EnergyConstraint, LtpConstraints, constraint_jacobian
from physproj.constraints.transform import (
    TransformSpec,
    denormalize,
    denormalize_jacobian_diag,
    fit_transform,
    normalize,
    sample_skewness,
)

__all__ = [
    "ELEMENTARY_CHARGE",
    "INPUT_NAMES",
    "K_BOLTZMANN",
    "OUTPUT_NAMES",
    "TORR_TO_PA",
    "ConstraintSet",
    "EnergyConstraint",
    "LtpConstraints",
    "LtpSchema",
    "TransformSpec",
    "constraint_jacobian",
    "denormalize",
    "denormalize_jacobian_diag",
    "fit_transform",
    "generate_synthetic_ltp",
    "load_ltp_csv",
    "normalize",
    "sample_skewness",
    "write_ltp_csv",
]
