"""Harmonic pair (u_up, u_down), Green's function and restricted systems."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .generator import KILLING, NATURAL, GeneratorSpec
from .measures import INF, RadonMeasure
from .solver import DEFAULT_H_MAX, Grid, PiecewiseSolution, _phi_scalar, build_grid


class RecurrentGenerator(ValueError):
    """The generator has no Green's function (recurrent diffusion)."""


class NotTransient(ValueError):
    """The generator with mass creation is not h-equivalent to a transient one."""


@dataclass
class HarmonicSystem:
    """Tabulated positive solutions of Lu = 0 with flux Wronskian one.

    With ``p = u'/w``, the pair satisfies ``u_down*p_up - u_up*p_down = 1``,
    i.e. ``W(u_down, u_up) = w`` in derivative units, and
    ``G(x, y) = u_up(min) * u_down(max)`` is the Green's function with respect
    to ``m(y) dy``.
    """

    gen: GeneratorSpec
    up: PiecewiseSolution
    down: PiecewiseSolution
    u_up_at_minus_inf: float
    u_down_at_plus_inf: float
    domain: tuple[float, float]

    def __post_init__(self):
        g = self.up.grid
        self.grid: Grid = g
        self.x = g.x
        self._uu, self._ud = self.up._u, self.down._u
        self._pur, self._pul = self.up._pr, self.up._pl
        self._pdr, self._pdl = self.down._pr, self.down._pl

    # scalar evaluation of both solutions at once

    def pair_state(self, t: float, side: str = "right") -> tuple[float, float, float, float]:
        """(u_up, p_up, u_down, p_down) at t, fluxes taken from the given side."""
        g = self.grid
        i = g.locate(t)
        if i >= 0 and t == g.xl[i]:
            if side == "right":
                return self._uu[i], self._pur[i], self._ud[i], self._pdr[i]
            return self._uu[i], self._pul[i], self._ud[i], self._pdl[i]
        if i < 0:
            w, _, q, _ = g.cell_params(-1)
            a11, a12, a21, a22 = _phi_scalar(t - g.xl[0], w, q, 0.0)
            uu, pu, ud, pd = self._uu[0], self._pul[0], self._ud[0], self._pdl[0]
        else:
            if i >= g.n - 1:
                w, _, q, s = g.cell_params(i)
            else:
                w, q, s = g.cells[i]
            a11, a12, a21, a22 = _phi_scalar(t - g.xl[i], w, q, s)
            uu, pu, ud, pd = self._uu[i], self._pur[i], self._ud[i], self._pdr[i]
        return (a11 * uu + a12 * pu, a21 * uu + a22 * pu, a11 * ud + a12 * pd, a21 * ud + a22 * pd)

    def u_up(self, t):
        return self.up(t)

    def u_down(self, t):
        return self.down(t)

    def du_up(self, t: float, side: str = "right") -> float:
        return self.up.derivative(t, side)

    def du_down(self, t: float, side: str = "right") -> float:
        return self.down.derivative(t, side)

    def w_at(self, t: float) -> float:
        return self.gen.w(t)

    def m_at(self, t: float) -> float:
        return self.gen.m(t)

    def scale(self, t: float) -> float:
        """Scale function, anchored at the first grid node."""
        return self.grid.scale_at(t)

    def inverse_scale(self, s: float) -> float:
        return self.grid.inverse_scale(s)

    def wronskian(self, t: float) -> float:
        """u_down u_up' - u_up u_down' at t (equals w(t))."""
        uu, pu, ud, pd = self.pair_state(t)
        return self.w_at(t) * (ud * pu - uu * pd)

    def _check(self, *pts: float) -> None:
        lo, hi = self.domain
        for p in pts:
            if not (lo - 1e-12 <= p <= hi + 1e-12):
                raise ValueError(f"point {p} outside the domain ({lo}, {hi})")

    def green(self, x, y):
        """G(x, y) = u_up(x ^ y) u_down(x v y); vectorized over arrays."""
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            x, y = float(x), float(y)
            self._check(x, y)
            a, b = (x, y) if x <= y else (y, x)
            if a == b:
                uu, _, ud, _ = self.pair_state(a)
                return uu * ud
            return self.up.state(a)[0] * self.down.state(b)[0]
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        a, b = np.minimum(x, y), np.maximum(x, y)
        return self.up.values(a.ravel())[0].reshape(a.shape) * self.down.values(b.ravel())[0].reshape(b.shape)

    def green_diag(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return self.up.values(x.ravel())[0].reshape(x.shape) * self.down.values(x.ravel())[0].reshape(x.shape)

    def kernel_k(self, y: float, z: float) -> float:
        """Determinantal kernel of the cut points, against Lebesgue measure.

        For Brownian motion this is -(1/2) u_up'((y^z)+) u_down'((yvz)-).
        """
        a, b = (y, z) if y <= z else (z, y)
        pu = self.up.state(a, "right")[1]
        pd = self.down.state(b, "left")[1]
        return -math.sqrt(self.w_at(y) * self.w_at(z)) * pu * pd

    def table(self) -> dict[str, np.ndarray]:
        """Columns x, u_up, u_down, du_up_r, du_down_r on the grid nodes."""
        g = self.grid
        w_right = np.append(g.w, g.tail_right[0]) if g.n > 1 else np.array([g.tail_right[0]])
        return {
            "x": g.x.copy(),
            "u_up": self.up.u.copy(),
            "u_down": self.down.u.copy(),
            "du_up_r": self.up.p_right * w_right,
            "du_down_r": self.down.p_right * w_right,
        }


def _computational_domain(gen: GeneratorSpec, window: tuple[float, float] | None) -> tuple[float, float]:
    lo, hi = gen.interval
    pts = gen.potential.breakpoints() + list(gen.m.breaks) + list(gen.w.breaks)
    if window is not None:
        pts += [v for v in window if math.isfinite(v)]
    pts = [p for p in pts if lo <= p <= hi]
    left = lo if math.isfinite(lo) else (min(pts) if pts else 0.0)
    right = hi if math.isfinite(hi) else (max(pts) if pts else 0.0)
    if math.isinf(lo):
        q = gen.kappa.left_tail()
        if q > 0 and window is None:
            left -= 10.0 / math.sqrt(2.0 * q * gen.m(left - 1.0) * gen.w(left - 1.0) / 2.0)
    if math.isinf(hi):
        q = gen.kappa.right_tail()
        if q > 0 and window is None:
            right += 10.0 / math.sqrt(2.0 * q * gen.m(right + 1.0) * gen.w(right + 1.0) / 2.0)
    return left, right


def _boundary_state(gen: GeneratorSpec, grid: Grid, side: str) -> tuple[float, float, float]:
    """(u, p, limit flag) for the solution minimal at one end.

    The flag is the value the solution tends to at that end, relative to u.
    """
    if side == "left":
        end, flag = gen.lo, gen.boundary[0]
        w, _, q = grid.tail_left
        sign = 1.0
    else:
        end, flag = gen.hi, gen.boundary[1]
        w, _, q = grid.tail_right
        sign = -1.0
    if math.isfinite(end):
        if flag == KILLING:
            return 0.0, sign, 0.0
        return 1.0, 0.0, 1.0
    if q < 0:
        raise NotTransient("mass creation extending to infinity is not supported")
    if q == 0:
        return 1.0, 0.0, 1.0
    return 1.0, sign * math.sqrt(q / w), 0.0


def harmonic_pair(gen: GeneratorSpec, window: tuple[float, float] | None = None,
                  h_max: float = DEFAULT_H_MAX) -> HarmonicSystem:
    """Build the normalized harmonic pair of ``gen``.

    ``window`` extends the tabulated grid on unbounded sides; evaluation
    outside the grid is exact in any case.
    """
    left, right = _computational_domain(gen, window)
    grid = build_grid(gen.potential, gen.m, gen.w, left, right, h_max=h_max)
    u0, p0, lim_l = _boundary_state(gen, grid, "left")
    up = PiecewiseSolution.march(grid, grid.xl[0], u0, p0 + u0 * grid.jump[0])
    u1, p1, lim_r = _boundary_state(gen, grid, "right")
    down = PiecewiseSolution.march(grid, grid.xl[-1], u1, p1)
    wr = down.u * up.p_right - up.u * down.p_right
    size = np.abs(down.u * up.p_right) + np.abs(up.u * down.p_right)
    scale_w = float(np.median(wr))
    if not np.all(size > 0) or scale_w <= 1e-12 * float(np.max(size)):
        if gen.creation.is_zero:
            raise RecurrentGenerator("no Green's function: the diffusion is recurrent")
        raise NotTransient("no positive decreasing solution")
    inner = slice(1 if u0 == 0.0 else 0, grid.n - 1 if u1 == 0.0 else grid.n)
    if np.any(up.u[inner] <= 0) or np.any(down.u[inner] <= 0):
        raise NotTransient("harmonic functions change sign")
    k = 1.0 / math.sqrt(scale_w)
    up, down = up.scaled(k), down.scaled(k)
    return HarmonicSystem(gen, up, down, lim_l * up._u[0], lim_r * down._u[-1], gen.interval)


def green(hs: HarmonicSystem, x: float, y: float) -> float:
    return hs.green(x, y)


def restricted_harmonics(hs: HarmonicSystem, x0: float, side: str, bc: str) -> HarmonicSystem:
    """Harmonic system of the generator restricted to one side of x0.

    ``side='right'`` keeps ``[x0, sup I)``, ``side='left'`` keeps ``(inf I, x0]``.
    ``bc`` is ``'killed'`` (Dirichlet at x0) or ``'reflected'`` (zero flux at x0).
    """
    if side not in ("left", "right") or bc not in ("killed", "reflected"):
        raise ValueError("side must be left|right and bc killed|reflected")
    gen = hs.gen
    if bc == "reflected" and gen.potential.atom_mass(x0) != 0.0:
        raise ValueError("cannot reflect at an atom of the potential")
    uu, pu, ud, pd = hs.pair_state(x0)
    flag = KILLING if bc == "killed" else NATURAL
    if side == "right":
        ratio = uu / ud if bc == "killed" else pu / pd
        up = hs.up.combine(1.0, hs.down, -ratio)
        down = hs.down
        lo, hi = x0, gen.hi
        new_gen = replace(gen, interval=(lo, hi), boundary=(flag, gen.boundary[1]),
                          kappa=gen.kappa.restrict(x0, INF, (False, True)),
                          creation=gen.creation.restrict(x0, INF, (False, True)))
        lim_lo = up.state(x0)[0]
        return HarmonicSystem(new_gen, up, down, lim_lo, hs.u_down_at_plus_inf, (lo, hi))
    ratio = ud / uu if bc == "killed" else pd / pu
    down = hs.down.combine(1.0, hs.up, -ratio)
    up = hs.up
    lo, hi = gen.lo, x0
    new_gen = replace(gen, interval=(lo, hi), boundary=(gen.boundary[0], flag),
                      kappa=gen.kappa.restrict(-INF, x0, (True, False)),
                      creation=gen.creation.restrict(-INF, x0, (True, False)))
    lim_hi = down.state(x0)[0]
    return HarmonicSystem(new_gen, up, down, hs.u_up_at_minus_inf, lim_hi, (lo, hi))
