"""Exact laws of a killed diffusion inside a gap between absorbing obstacles."""

from __future__ import annotations

import math

import numpy as np

from ..core.harmonic import HarmonicSystem
from ..core.invert import invert_nondecreasing


class GapLaw:
    """Diffusion on (a, b) killed by kappa and absorbed at the ends flagged absorbing.

    Two solutions organize everything: ``f`` vanishes at an absorbing ``a``
    (or is ``u_up`` if ``a`` is not absorbing) and ``g`` vanishes at an
    absorbing ``b`` (or is ``u_down``). Both are stored as coefficients on
    the basis (u_up, u_down). Fluxes are normalized so that ``p_f(a+) = 1``
    and ``p_g(b-) = -1`` at absorbing ends.
    """

    __slots__ = ("hs", "a", "b", "a_abs", "b_abs", "f1", "f2", "g1", "g2", "D", "pf_a", "pg_b")

    def __init__(self, hs: HarmonicSystem, a: float, a_abs: bool, b: float, b_abs: bool):
        self.hs = hs
        self.a, self.b, self.a_abs, self.b_abs = a, b, a_abs, b_abs
        if a_abs:
            uu, _, ud, _ = hs.pair_state(a)
            self.f1, self.f2 = ud, -uu
        else:
            self.f1, self.f2 = 1.0, 0.0
        if b_abs:
            uu, _, ud, _ = hs.pair_state(b)
            self.g1, self.g2 = -ud, uu
        else:
            self.g1, self.g2 = 0.0, 1.0
        self.D = self.f1 * self.g2 - self.f2 * self.g1
        self.pf_a = 1.0 if a_abs else 0.0
        self.pg_b = -1.0 if b_abs else 0.0

    def at(self, t: float, side: str = "right") -> tuple[float, float, float, float]:
        """(f, p_f, g, p_g) at t."""
        uu, pu, ud, pd = self.hs.pair_state(t, side)
        return (self.f1 * uu + self.f2 * ud, self.f1 * pu + self.f2 * pd,
                self.g1 * uu + self.g2 * ud, self.g1 * pu + self.g2 * pd)

    def outcome_masses(self, x: float) -> tuple[float, float, float, float]:
        """P(absorbed at a), P(absorbed at b), P(killed left of x), P(killed right of x)."""
        f, pf, g, pg = self.at(x)
        D = self.D
        pa = g / D if self.a_abs else 0.0
        pb = f / D if self.b_abs else 0.0
        kl = g * (pf - self.pf_a) / D
        kr = f * (self.pg_b - pg) / D
        return pa, pb, max(kl, 0.0), max(kr, 0.0)

    # inversion helpers on node arrays

    def _flux_nodes(self, c1: float, c2: float):
        up, down = self.hs.up, self.hs.down

        def nodes(i, j, side):
            if side == "right":
                return c1 * up.p_right[i:j] + c2 * down.p_right[i:j]
            return c1 * up.p_left[i:j] + c2 * down.p_left[i:j]

        return nodes

    def _flux_value(self, c1: float, c2: float):
        hs = self.hs

        def value(t, side):
            uu, pu, ud, pd = hs.pair_state(t, side)
            return c1 * pu + c2 * pd

        return value

    def _flux_slope(self, c1: float, c2: float):
        hs = self.hs
        grid = hs.grid

        def slope(t):
            uu, _, ud, _ = hs.pair_state(t)
            return (c1 * uu + c2 * ud) * grid.q_at(t)

        return slope

    def sample_kill_left(self, x: float, rng: np.random.Generator) -> float:
        _, pf, _, _ = self.at(x)
        target = self.pf_a + rng.random() * (pf - self.pf_a)
        c1, c2 = self.f1, self.f2
        return invert_nondecreasing(self.hs, self.a, x, target, self._flux_nodes(c1, c2),
                                    self._flux_value(c1, c2), self._flux_slope(c1, c2))

    def sample_kill_right(self, x: float, rng: np.random.Generator) -> float:
        _, _, _, pg = self.at(x)
        target = pg + rng.random() * (self.pg_b - pg)
        c1, c2 = self.g1, self.g2
        y = invert_nondecreasing(self.hs, x, self.b, target, self._flux_nodes(c1, c2),
                                 self._flux_value(c1, c2), self._flux_slope(c1, c2))
        return min(y, self.b)

    def next_root(self, y0: float, rng: np.random.Generator) -> float | None:
        """Next root to the right of the root y0, or None if y0 is the last one.

        Uses the renewal density (S(y) - S(y0)) g(y) / g(y0) against m kappa;
        absorbing right ends count as 'no further interior root'.
        """
        hs, grid = self.hs, self.hs.grid
        g1, g2 = self.g1, self.g2
        s0 = grid.scale_at(y0)
        _, _, g0, _ = self.at(y0)
        if g0 <= 0:
            return None
        end = self._renewal_value(self.b, "left", s0, g0) if math.isfinite(self.b) else g0 - g2 * hs.u_down_at_plus_inf
        target = rng.random() * g0
        if target >= end:
            return None
        up, down = hs.up, hs.down
        S = grid.scale

        def nodes(i, j, side):
            pu = up.p_right[i:j] if side == "right" else up.p_left[i:j]
            pd = down.p_right[i:j] if side == "right" else down.p_left[i:j]
            gv = g1 * up.u[i:j] + g2 * down.u[i:j]
            return (S[i:j] - s0) * (g1 * pu + g2 * pd) - gv + g0

        def value(t, side):
            return self._renewal_value(t, side, s0, g0)

        def slope(t):
            uu, _, ud, _ = hs.pair_state(t)
            return (grid.scale_at(t) - s0) * (g1 * uu + g2 * ud) * grid.q_at(t)

        y = invert_nondecreasing(hs, y0, self.b, target, nodes, value, slope)
        if self.b_abs and y >= self.b:
            return None
        return y

    def _renewal_value(self, t: float, side: str, s0: float, g0: float) -> float:
        uu, pu, ud, pd = self.hs.pair_state(t, side)
        g = self.g1 * uu + self.g2 * ud
        pg = self.g1 * pu + self.g2 * pd
        return (self.hs.grid.scale_at(t) - s0) * pg - g + g0


def scale_uniform(hs: HarmonicSystem, a: float, b: float, rng: np.random.Generator) -> float:
    """A point of (a, b) uniform with respect to the scale measure w(x) dx."""
    grid = hs.grid
    sa, sb = grid.scale_at(a), grid.scale_at(b)
    z = grid.inverse_scale(sa + rng.random() * (sb - sa))
    return min(max(z, a), b)


def close_gap(hs: HarmonicSystem, a: float, b: float, rng: np.random.Generator) -> tuple[list[float], list[float]]:
    """Roots and cut points filling the gap between two absorbing obstacles at a < b."""
    law = GapLaw(hs, a, True, b, True)
    roots: list[float] = []
    cuts: list[float] = []
    left = a
    while True:
        y = law.next_root(left, rng)
        if y is None:
            cuts.append(scale_uniform(hs, left, b, rng))
            return roots, cuts
        cuts.append(scale_uniform(hs, left, y, rng))
        roots.append(y)
        left = y
