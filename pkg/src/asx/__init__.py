"""High-precision workbench for exponential asymptotics of ODEs on rays."""

from .core import (
    CoeffSeq,
    Ray,
    WeightProfile,
    a_star,
    dawson,
    dawson_max,
    digamma_real,
    eval_truncated,
    gamma_guarded,
    ray_grid,
    weight_profile,
    weight_transform,
)
from .numeric import current_precision, set_default_precision, working_precision

__version__ = "0.1.0"

__all__ = [
    "CoeffSeq",
    "Ray",
    "WeightProfile",
    "a_star",
    "current_precision",
    "dawson",
    "dawson_max",
    "digamma_real",
    "eval_truncated",
    "gamma_guarded",
    "ray_grid",
    "set_default_precision",
    "weight_profile",
    "weight_transform",
    "working_precision",
]
