"""Direct sampling of the roots as a renewal chain, for killing with finite first moments."""

from __future__ import annotations

import math

import numpy as np

from ..core.generator import KILLING, ConfigError, GeneratorSpec
from ..core.harmonic import HarmonicSystem, harmonic_pair
from ..core.invert import invert_nondecreasing
from ..rng import as_rng
from .config import PointConfig
from .gaps import GapLaw, scale_uniform


def _killing_end(gen: GeneratorSpec, side: int) -> bool:
    return math.isfinite(gen.interval[side]) and gen.boundary[side] == KILLING


def _down_flux_ends(hs: HarmonicSystem) -> tuple[float, float]:
    """Flux of u_down just outside the interval on each side (0 past an infinite right end)."""
    gen = hs.gen
    lo = hs.pair_state(gen.lo, "left")[3] if math.isfinite(gen.lo) else hs.down.p_left[0]
    hi = hs.pair_state(gen.hi, "right")[3] if math.isfinite(gen.hi) else 0.0
    return lo, hi


def leftmost_mass(hs: HarmonicSystem) -> float:
    """Total mass of the leftmost-root law on the open interval (1 when no killing end)."""
    if _killing_end(hs.gen, 0):
        return 0.0
    lo, hi = _down_flux_ends(hs)
    return hs.u_up_at_minus_inf * (hi - lo)


def _leftmost(hs: HarmonicSystem, rng: np.random.Generator) -> float | None:
    gen = hs.gen
    if _killing_end(gen, 0):
        return gen.lo
    uinf = hs.u_up_at_minus_inf
    pd0 = _down_flux_ends(hs)[0]
    v = rng.random()
    if v >= leftmost_mass(hs):
        # only a killing right end can carry the remaining mass
        return gen.hi if _killing_end(gen, 1) else None
    target = pd0 + v / uinf
    down, grid = hs.down, hs.grid

    def nodes(i, j, side):
        return down.p_right[i:j] if side == "right" else down.p_left[i:j]

    def value(t, side):
        return hs.pair_state(t, side)[3]

    def slope(t):
        return hs.pair_state(t)[2] * grid.q_at(t)

    return invert_nondecreasing(hs, gen.lo, gen.hi, target, nodes, value, slope)


def chain_sample(gen: GeneratorSpec, hs: HarmonicSystem | None = None, rng=None,
                 max_points: int = 1_000_000) -> PointConfig:
    """Exact sample of all roots and cut points, left to right."""
    rng = as_rng(rng)
    if not gen.kappa.first_moment_finite("left") and not _killing_end(gen, 0):
        raise ConfigError("killing without a finite first moment on the left: infinitely many roots")
    if not gen.kappa.first_moment_finite("right") and not _killing_end(gen, 1):
        raise ConfigError("killing without a finite first moment on the right: infinitely many roots")
    if hs is None:
        hs = harmonic_pair(gen)
    if not _killing_end(gen, 0) and not hs.u_up_at_minus_inf > 0:
        raise ConfigError("u_up vanishes at the left end: expected number of roots is infinite")
    if not _killing_end(gen, 1) and not hs.u_down_at_plus_inf > 0:
        raise ConfigError("u_down vanishes at the right end: expected number of roots is infinite")
    y = _leftmost(hs, rng)
    if y is None:
        return PointConfig(info={"leftmost_mass": leftmost_mass(hs)})
    Y = [y]
    Z: list[float] = []
    law = GapLaw(hs, gen.lo, False, gen.hi, False)
    while len(Y) < max_points:
        if y == gen.hi:
            break
        nxt = law.next_root(y, rng)
        if nxt is None:
            if _killing_end(gen, 1):
                nxt = gen.hi
            else:
                break
        Z.append(scale_uniform(hs, y, nxt, rng))
        Y.append(nxt)
        y = nxt
    cfg = PointConfig(np.array(Y), np.array(Z))
    cfg.info["leftmost_mass"] = leftmost_mass(hs)
    return cfg
