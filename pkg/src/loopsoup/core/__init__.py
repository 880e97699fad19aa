from .classify import Classification, GeneratorClass, classify, perturb
from .generator import KILLING, NATURAL, ConfigError, GeneratorSpec
from .harmonic import (HarmonicSystem, NotTransient, RecurrentGenerator, green, harmonic_pair,
                       restricted_harmonics)
from .measures import INF, MeasureError, PiecewiseConstant, RadonMeasure, SignedMeasure
from .solver import PiecewiseSolution, SolverOverflow, solve_ivp

__all__ = [
    "Classification", "ConfigError", "GeneratorClass", "GeneratorSpec", "HarmonicSystem", "INF",
    "KILLING", "MeasureError", "NATURAL", "NotTransient", "PiecewiseConstant", "PiecewiseSolution",
    "RadonMeasure", "RecurrentGenerator", "SignedMeasure", "SolverOverflow", "classify", "green",
    "harmonic_pair", "perturb", "restricted_harmonics", "solve_ivp",
]
