"""Sorting generators with mass creation into transient-like, critical and supercritical."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .generator import GeneratorSpec
from .harmonic import NotTransient, _boundary_state, _computational_domain
from .measures import SignedMeasure
from .solver import DEFAULT_H_MAX, PiecewiseSolution, build_grid

ZERO_BAND = 1e-6


class GeneratorClass(enum.Enum):
    D_MINUS = "D-"
    D_ZERO = "D0"
    D_PLUS = "D+"


@dataclass(frozen=True)
class Classification:
    kind: GeneratorClass
    margin: float

    def __eq__(self, other):
        if isinstance(other, GeneratorClass):
            return self.kind is other
        return NotImplemented if not isinstance(other, Classification) else (self.kind, self.margin) == (other.kind, other.margin)

    def __hash__(self):
        return hash((self.kind, self.margin))


def classify(gen0: GeneratorSpec, nu: SignedMeasure | None = None, band: float = ZERO_BAND,
             h_max: float = DEFAULT_H_MAX) -> Classification:
    """Classify ``gen0 + nu`` by shooting the solution minimal at the left end.

    The solution is marched to the right end and compared with the solution
    minimal there through their Wronskian. A zero crossing inside the interval
    or a negative Wronskian means some positive harmonic function fails to
    exist; a Wronskian within ``band`` of zero is the critical case.
    """
    gen = gen0 if nu is None else gen0.add_potential(nu)
    pot = gen.potential
    lo_h, hi_h = pot.support_hull() if not pot.is_zero else (0.0, 0.0)
    if not pot.positive.is_zero:
        a, b = pot.positive.support_hull()
        if math.isinf(a) or math.isinf(b):
            raise ValueError("mass creation must be compactly supported")
    left, right = _computational_domain(gen, None)
    grid = build_grid(pot, gen.m, gen.w, left, right, h_max=h_max)
    u0, p0, _ = _boundary_state(gen, grid, "left")
    shoot = PiecewiseSolution.march(grid, grid.xl[0], u0, p0 + u0 * grid.jump[0])
    u1, p1, _ = _boundary_state(gen, grid, "right")
    length = max(right - left, 1.0)
    size_l = max(float(np.max(np.abs(shoot.u))), float(np.max(np.abs(shoot.p_right))) * length)
    size_r = max(abs(u1), abs(p1) * length)
    # W(u_R, u_L) at the right end node, using the flux beyond it
    raw = u1 * shoot.p_right[-1] - shoot.u[-1] * p1
    margin = raw * length / (size_l * size_r)
    start = 1 if u0 == 0.0 else 0
    stop = grid.n - 1 if u1 == 0.0 else grid.n
    if np.any(shoot.u[start:stop] < 0) or (stop == grid.n - 1 and shoot.u[-1] < 0):
        return Classification(GeneratorClass.D_PLUS, min(margin, -abs(margin)))
    if abs(margin) < band:
        return Classification(GeneratorClass.D_ZERO, margin)
    if margin < 0:
        return Classification(GeneratorClass.D_PLUS, margin)
    return Classification(GeneratorClass.D_MINUS, margin)


def perturb(gen: GeneratorSpec, nu_tilde: SignedMeasure) -> GeneratorSpec:
    """Generator with potential shifted by ``nu_tilde`` (positive part creates mass)."""
    out = gen.add_potential(nu_tilde)
    if not nu_tilde.positive.is_zero:
        res = classify(out)
        if res.kind is not GeneratorClass.D_MINUS:
            raise NotTransient(f"perturbed generator is {res.kind.value} (margin {res.margin:.3g})")
    return out
