"""Samplers and evaluators for the interleaved root / cut-point processes."""

from .chain import chain_sample, leftmost_mass
from .config import InterleavingError, PointConfig
from .moments import (KernelK, count_moment_Y, count_moment_Z, joint_density, prob_no_root_right_of,
                      resample_Y_given_Z, resample_Z_given_Y)
from .wilson import WilsonState, wilson_sample, wilson_step

__all__ = [
    "InterleavingError", "KernelK", "PointConfig", "WilsonState", "chain_sample", "count_moment_Y",
    "count_moment_Z", "joint_density", "leftmost_mass", "prob_no_root_right_of", "resample_Y_given_Z",
    "resample_Z_given_Y", "wilson_sample", "wilson_step",
]
