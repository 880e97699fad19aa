"""Exact marching for u' = w p, dp = -u m nu.

Between breakpoints m and w are constant and nu has a linear density, so the
two-point Magnus exponential of the 2x2 system is written in closed form
(it is exact when the density is constant). Atoms of nu change the flux
``p = u'/w`` by ``-u m nu({x})``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .measures import INF, PiecewiseConstant, SignedMeasure

_SQ3 = math.sqrt(3.0)
_GAUSS_LO = 0.5 - _SQ3 / 6.0
_GAUSS_HI = 0.5 + _SQ3 / 6.0

DEFAULT_H_MAX = 0.05
STEP_TOL = 1e-12


class SolverOverflow(OverflowError):
    def __init__(self, x: float):
        super().__init__(f"solution overflowed near x={x:g}")
        self.x = x


def _phi_scalar(h: float, w: float, q0: float, s: float):
    """Transfer matrix over a step of signed length h starting where q = q0."""
    if h == 0.0:
        return 1.0, 0.0, 0.0, 1.0
    qbar = q0 + 0.5 * s * h
    c = -h * h * h * w * s / 12.0 if s else 0.0
    b = h * w
    cq = h * qbar
    delta = c * c + b * cq
    if delta > 1e-8:
        r = math.sqrt(delta)
        ch = math.cosh(r)
        sh = math.sinh(r) / r
    elif delta < -1e-8:
        r = math.sqrt(-delta)
        ch = math.cos(r)
        sh = math.sin(r) / r
    else:
        ch = 1.0 + delta / 2.0 + delta * delta / 24.0
        sh = 1.0 + delta / 6.0 + delta * delta / 120.0
    return ch + sh * c, sh * b, sh * cq, ch - sh * c


def _phi_array(h: np.ndarray, w: np.ndarray, q0: np.ndarray, s: np.ndarray):
    qbar = q0 + 0.5 * s * h
    c = -h * h * h * w * s / 12.0
    b = h * w
    cq = h * qbar
    delta = c * c + b * cq
    r = np.sqrt(np.abs(delta))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ch = np.where(delta >= 0, np.cosh(r), np.cos(r))
        sh = np.where(delta >= 0, np.sinh(r), np.sin(r)) / np.where(r > 0, r, 1.0)
    small = np.abs(delta) <= 1e-8
    ch = np.where(small, 1.0 + delta / 2.0 + delta * delta / 24.0, ch)
    sh = np.where(small, 1.0 + delta / 6.0 + delta * delta / 120.0, sh)
    return ch + sh * c, sh * b, sh * cq, ch - sh * c


@dataclass
class Grid:
    """Nodes and per-cell coefficients shared by every solution on a domain.

    Cell i is ``[x[i], x[i+1])`` with scale density ``w[i]``, speed ``m[i]``
    and ``q(x) = q0[i] + s[i] (x - x[i])``, where ``q = -m * density(nu)``.
    ``jump[i] = -m(x[i]) * nu({x[i]})``, the flux increment at node i. Beyond the end nodes the coefficients
    are frozen at ``tail_left`` / ``tail_right`` = (w, m, q).
    """

    x: np.ndarray
    w: np.ndarray
    m: np.ndarray
    q0: np.ndarray
    s: np.ndarray
    jump: np.ndarray
    tail_left: tuple[float, float, float]
    tail_right: tuple[float, float, float]
    scale: np.ndarray  # scale function at the nodes, 0 at x[0]

    def __post_init__(self):
        self.xl = self.x.tolist()
        self.cells = list(zip(self.w.tolist(), self.q0.tolist(), self.s.tolist()))
        self.n = len(self.xl)
        self.ml = self.m.tolist()

    def cell_params(self, i: int):
        """(w, m, q0, s) for cell i; -1 and n-1 denote the tails."""
        if i < 0:
            w, m, q = self.tail_left
            return w, m, q, 0.0
        if i >= self.n - 1:
            w, m, q = self.tail_right
            return w, m, q, 0.0
        w, q, s = self.cells[i]
        return w, self.ml[i], q, s

    def locate(self, t: float) -> int:
        return bisect.bisect_right(self.xl, t) - 1

    def q_at(self, t: float) -> float:
        """Killing-minus-creation density times m at t (right limit)."""
        i = self.locate(t)
        w, m, q, s = self.cell_params(i)
        return q + s * (t - self.xl[i]) if s else q

    def scale_at(self, t: float) -> float:
        i = self.locate(t)
        if i < 0:
            return self.scale[0] - self.tail_left[0] * (self.xl[0] - t)
        w = self.tail_right[0] if i >= self.n - 1 else self.cells[i][0]
        return self.scale[i] + w * (t - self.xl[i])

    def inverse_scale(self, target: float) -> float:
        if target <= self.scale[0]:
            return self.xl[0] - (self.scale[0] - target) / self.tail_left[0]
        i = int(np.searchsorted(self.scale, target, side="right")) - 1
        w = self.tail_right[0] if i >= self.n - 1 else self.cells[i][0]
        return self.xl[i] + (target - self.scale[i]) / w


def build_grid(nu: SignedMeasure, m: PiecewiseConstant, w: PiecewiseConstant, lo: float, hi: float,
               extra: tuple[float, ...] = (), h_max: float = DEFAULT_H_MAX) -> Grid:
    """Node set covering [lo, hi] (finite ends of the computational domain)."""
    pts = {lo, hi}
    for b in list(nu.breakpoints()) + list(m.breaks) + list(w.breaks) + list(extra):
        if lo <= b <= hi:
            pts.add(b)
    pts = sorted(pts)
    nodes = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        mid = 0.5 * (a + b)
        qa = m(mid) * -(nu.density_at(mid))
        slope = _density_slope(nu, mid) * m(mid)
        n_sub = 1
        if qa != 0.0 or slope != 0.0:
            n_sub = max(1, int(math.ceil((b - a) / h_max)))
            if slope != 0.0:
                # local Magnus error ~ (w |slope|) h^5 kept below STEP_TOL
                h_err = (STEP_TOL / (w(mid) * abs(slope))) ** 0.2
                n_sub = max(n_sub, int(math.ceil((b - a) / h_err)))
        for k in range(1, n_sub):
            nodes.append(a + (b - a) * k / n_sub)
        nodes.append(b)
    x = np.array(nodes)
    mids = 0.5 * (x[:-1] + x[1:])
    wc = w.array(mids)
    mc = m.array(mids)
    q0 = np.array([-mm * nu.density_at(xx) for mm, xx in zip(mc, x[:-1])]) if len(x) > 1 else np.zeros(0)
    sc = np.array([-mm * _density_slope(nu, mm_x) for mm, mm_x in zip(mc, mids)]) if len(x) > 1 else np.zeros(0)
    jump = np.array([-m(xx) * nu.atom_mass(xx) for xx in x])
    scale = np.concatenate([[0.0], np.cumsum(wc * np.diff(x))])

    def tail(point: float, side: int) -> tuple[float, float, float]:
        if side < 0:
            probe = point - 1.0
            dens = nu.positive.left_tail() - nu.negative.left_tail()
        else:
            probe = point + 1.0
            dens = nu.positive.right_tail() - nu.negative.right_tail()
        return (w(probe), m(probe), -m(probe) * dens)

    return Grid(x, wc, mc, q0, sc, jump, tail(x[0], -1), tail(x[-1], 1), scale)


def _density_slope(nu: SignedMeasure, x: float) -> float:
    total = 0.0
    for sign, meas in ((1.0, nu.positive), (-1.0, nu.negative)):
        for lo, hi, _, s in meas.density:
            if lo <= x < hi:
                total += sign * s
    return total


class PiecewiseSolution:
    """A solution tabulated on a :class:`Grid`, with exact evaluation anywhere.

    ``u``, ``p_left`` and ``p_right`` hold the value and the one-sided fluxes
    ``p = u'/w`` at every node.
    """

    def __init__(self, grid: Grid, u: np.ndarray, p_left: np.ndarray, p_right: np.ndarray):
        self.grid = grid
        self.u = u
        self.p_left = p_left
        self.p_right = p_right
        self._u = u.tolist()
        self._pr = p_right.tolist()
        self._pl = p_left.tolist()

    @classmethod
    def march(cls, grid: Grid, x0: float, u0: float, p0: float) -> "PiecewiseSolution":
        """Solve from the state (u0, right flux p0) at the node x0 in both directions."""
        x = grid.xl
        n = grid.n
        i0 = bisect.bisect_left(x, x0)
        if i0 >= n or x[i0] != x0:
            raise ValueError("x0 must be a grid node")
        u = [0.0] * n
        pl = [0.0] * n
        pr = [0.0] * n
        u[i0], pr[i0] = u0, p0
        pl[i0] = p0 - u0 * grid.jump[i0]
        h = np.diff(grid.x)
        a11, a12, a21, a22 = _phi_array(h, grid.w, grid.q0, grid.s)
        a11, a12, a21, a22 = a11.tolist(), a12.tolist(), a21.tolist(), a22.tolist()
        jump = grid.jump.tolist()
        for i in range(i0, n - 1):
            uu, pp = u[i], pr[i]
            un = a11[i] * uu + a12[i] * pp
            pn = a21[i] * uu + a22[i] * pp
            u[i + 1] = un
            pl[i + 1] = pn
            pr[i + 1] = pn + un * jump[i + 1]
        for i in range(i0 - 1, -1, -1):
            uu, pp = u[i + 1], pl[i + 1]
            # inverse of a unimodular 2x2
            un = a22[i] * uu - a12[i] * pp
            pn = -a21[i] * uu + a11[i] * pp
            u[i] = un
            pr[i] = pn
            pl[i] = pn - un * jump[i]
        ua = np.array(u)
        if not np.all(np.isfinite(ua)) or not np.all(np.isfinite(pr)):
            bad = int(np.argmin(np.isfinite(ua) & np.isfinite(pr)))
            raise SolverOverflow(x[bad])
        return cls(grid, ua, np.array(pl), np.array(pr))

    def combine(self, a: float, other: "PiecewiseSolution", b: float) -> "PiecewiseSolution":
        """The solution ``a*self + b*other`` (same grid)."""
        return PiecewiseSolution(self.grid, a * self.u + b * other.u,
                                 a * self.p_left + b * other.p_left, a * self.p_right + b * other.p_right)

    def scaled(self, a: float) -> "PiecewiseSolution":
        return PiecewiseSolution(self.grid, a * self.u, a * self.p_left, a * self.p_right)

    def state(self, t: float, side: str = "right") -> tuple[float, float]:
        """(u(t), p(t+)) or (u(t), p(t-))."""
        g = self.grid
        i = g.locate(t)
        if i < 0:
            w, _, q, _ = g.cell_params(-1)
            a11, a12, a21, a22 = _phi_scalar(t - g.xl[0], w, q, 0.0)
            uu, pp = self._u[0], self._pl[0]
            return a11 * uu + a12 * pp, a21 * uu + a22 * pp
        xi = g.xl[i]
        if t == xi:
            return self._u[i], (self._pr[i] if side == "right" else self._pl[i])
        if i >= g.n - 1:
            w, _, q, s = g.cell_params(i)
        else:
            w, q, s = g.cells[i]
        a11, a12, a21, a22 = _phi_scalar(t - xi, w, q, s)
        uu, pp = self._u[i], self._pr[i]
        return a11 * uu + a12 * pp, a21 * uu + a22 * pp

    def __call__(self, t):
        if np.ndim(t) == 0:
            return self.state(float(t))[0]
        return self.values(np.asarray(t, dtype=float))[0]

    def values(self, t: np.ndarray, side: str = "right") -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (u, p) at the points t."""
        g = self.grid
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(g.x, t, side="right") - 1
        inner = (idx >= 0) & (idx < g.n - 1)
        ic = np.clip(idx, 0, max(g.n - 2, 0))
        if g.n > 1:
            w = np.where(inner, g.w[ic], np.where(idx < 0, g.tail_left[0], g.tail_right[0]))
            q = np.where(inner, g.q0[ic], np.where(idx < 0, g.tail_left[2], g.tail_right[2]))
            s = np.where(inner, g.s[ic], 0.0)
        else:
            w = np.where(idx < 0, g.tail_left[0], g.tail_right[0])
            q = np.where(idx < 0, g.tail_left[2], g.tail_right[2])
            s = np.zeros_like(t)
        base = np.clip(idx, 0, g.n - 1)
        uu = self.u[base]
        pp = np.where(idx < 0, self.p_left[0], self.p_right[base])
        ref = np.where(idx < 0, g.x[0], g.x[base])
        h = t - ref
        a11, a12, a21, a22 = _phi_array(h, w, q, s)
        u_out = a11 * uu + a12 * pp
        p_out = a21 * uu + a22 * pp
        if side == "left":
            at_node = (idx >= 0) & (g.x[base] == t)
            p_out = np.where(at_node, self.p_left[base], p_out)
        return u_out, p_out

    def derivative(self, t: float, side: str = "right") -> float:
        """du/dx at t from the given side."""
        u, p = self.state(t, side)
        return p * self._w_side(t, side)

    def _w_side(self, t: float, side: str) -> float:
        g = self.grid
        eps_t = t if side == "right" else math.nextafter(t, -INF)
        i = g.locate(eps_t)
        return g.cell_params(i)[0]


def solve_ivp(nu: SignedMeasure, x0: float, u0: float, v0: float, domain: tuple[float, float],
              h_max: float = DEFAULT_H_MAX) -> PiecewiseSolution:
    """Solve u'' + u nu = 0 on a bounded domain with u(x0)=u0, u'(x0+)=v0."""
    lo, hi = domain
    for v in (x0, u0, v0, lo, hi):
        if not math.isfinite(v):
            raise ValueError("solve_ivp needs finite data and a bounded domain")
    if not lo <= x0 <= hi:
        raise ValueError("x0 outside the domain")
    one = PiecewiseConstant.constant(1.0)
    grid = build_grid(nu, one, one, lo, hi, extra=(x0,), h_max=h_max)
    return PiecewiseSolution.march(grid, x0, u0, v0)
