"""Densities, factorial moments and conditional resampling for the roots and cut points."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..core.generator import KILLING
from ..core.harmonic import HarmonicSystem
from ..core.measures import RadonMeasure, gauss_legendre
from ..rng import as_rng
from .config import InterleavingError, PointConfig
from .gaps import scale_uniform

Interval = tuple[float, float]


class KernelK:
    """Determinantal kernel of the cut points (reference: Lebesgue measure).

    Factorizes as ``A(min) * B(max)`` with ``A = sqrt(w) p_up(+)`` and
    ``B = -sqrt(w) p_down(-)``.
    """

    def __init__(self, hs: HarmonicSystem):
        self.hs = hs

    def __call__(self, y: float, z: float) -> float:
        return self.hs.kernel_k(y, z)

    def factors(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        hs = self.hs
        x = np.asarray(x, float)
        w = np.sqrt(np.array([hs.w_at(t) for t in x.ravel()])).reshape(x.shape)
        _, pu = hs.up.values(x.ravel(), "right")
        _, pd = hs.down.values(x.ravel(), "left")
        return w * pu.reshape(x.shape), -w * pd.reshape(x.shape)

    def matrix(self, pts: Sequence[float]) -> np.ndarray:
        pts = np.asarray(pts, float)
        A, B = self.factors(pts)
        order = np.argsort(pts)
        rank = np.empty_like(order)
        rank[order] = np.arange(pts.size)
        i, j = np.meshgrid(np.arange(pts.size), np.arange(pts.size), indexing="ij")
        first = np.where(rank[i] <= rank[j], i, j)
        second = np.where(rank[i] <= rank[j], j, i)
        return A[first] * B[second]


def _chain_det(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Determinant of the kernel a(min) b(max) at sorted points (last axis)."""
    out = a[..., 0] * b[..., -1]
    for r in range(1, a.shape[-1]):
        out = out * (b[..., r - 1] * a[..., r] - a[..., r - 1] * b[..., r])
    return out


def joint_density(points: Sequence[float], hs: HarmonicSystem) -> float:
    """Density of an alternating configuration y0 < z1 < y1 < ... < zn < yn.

    Taken against ``m kappa`` at the roots and Lebesgue measure at the cut
    points; it equals ``G(y0, yn) * prod w(z_i)`` (``2**n G`` for Brownian motion).
    """
    pts = [float(p) for p in points]
    if len(pts) % 2 == 0 or any(b <= a for a, b in zip(pts, pts[1:])):
        raise InterleavingError("expected strictly increasing y0 < z1 < y1 < ... < yn")
    dens = hs.green(pts[0], pts[-1])
    for z in pts[1::2]:
        dens *= hs.w_at(z)
    return float(dens)


def _cuts(hs: HarmonicSystem, a: float, b: float) -> list[float]:
    pts = [p for p in hs.gen.potential.breakpoints() if a < p < b]
    return [a] + sorted(set(pts)) + [b]


def _root_quadrature(hs: HarmonicSystem, a: float, b: float, order: int):
    """Nodes/weights for m*kappa on [a, b), split where the harmonic pair has kinks."""
    mk = hs.gen.kappa.weighted(hs.gen.m)
    cuts = _cuts(hs, a, b)
    xs, ws = [], []
    for lo, hi in zip(cuts, cuts[1:]):
        x, w = mk.restrict(lo, hi, (True, False)).quadrature(lo, hi, order)
        xs.append(x)
        ws.append(w)
    if math.isfinite(b) and b == hs.gen.hi:
        x, w = mk.restrict(b, b).quadrature(b, b, order)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _lebesgue_quadrature(hs: HarmonicSystem, a: float, b: float, order: int):
    if not (math.isfinite(a) and math.isfinite(b)):
        g = hs.grid
        if math.isinf(a):
            q = g.tail_left[2]
            a = g.xl[0] - (40.0 / math.sqrt(q / g.tail_left[0]) if q > 0 else 0.0)
        if math.isinf(b):
            q = g.tail_right[2]
            b = g.xl[-1] + (40.0 / math.sqrt(q / g.tail_right[0]) if q > 0 else 0.0)
        if b <= a:
            return np.zeros(0), np.zeros(0)
    cuts = _cuts(hs, a, b)
    # panels no wider than 1 so smooth exponential factors are well resolved
    fine = []
    for lo, hi in zip(cuts, cuts[1:]):
        k = max(1, int(math.ceil(hi - lo)))
        fine.extend(np.linspace(lo, hi, k + 1)[:-1].tolist())
    fine.append(cuts[-1])
    t, wt = gauss_legendre(order)
    xs = [lo + (hi - lo) * t for lo, hi in zip(fine, fine[1:])]
    ws = [(hi - lo) * wt for lo, hi in zip(fine, fine[1:])]
    return np.concatenate(xs), np.concatenate(ws)


def _factorial_moment(nodes: list[tuple[np.ndarray, np.ndarray]], factors) -> float:
    total = 0.0
    # tensor product, chunked over the first axis to bound memory
    x0, w0 = nodes[0]
    rest = nodes[1:]
    for k in range(x0.size):
        grids = np.meshgrid(*([np.array([x0[k]])] + [x for x, _ in rest]), indexing="ij")
        wgrid = np.ones_like(grids[0]) * w0[k]
        for d, (_, w) in enumerate(rest, start=1):
            shape = [1] * len(nodes)
            shape[d] = w.size
            wgrid = wgrid * w.reshape(shape)
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        pts.sort(axis=-1)
        a, b = factors(pts)
        total += float(np.dot(wgrid.ravel(), _chain_det(a, b)))
    return total


def count_moment_Y(intervals: Sequence[Interval], hs: HarmonicSystem, order: int = 48) -> float:
    """E of the product of root counts, i.e. the integral of det G over the product of intervals.

    Disjoint intervals give E[prod #(Y in A_i)]; repeating an interval gives
    factorial moments.
    """
    nodes = [_root_quadrature(hs, a, b, order) for a, b in intervals]
    if any(x.size == 0 for x, _ in nodes):
        return 0.0

    def factors(pts):
        flat = pts.ravel()
        return (hs.up.values(flat)[0].reshape(pts.shape), hs.down.values(flat)[0].reshape(pts.shape))

    return _factorial_moment(nodes, factors)


def count_moment_Z(intervals: Sequence[Interval], hs: HarmonicSystem, order: int = 48) -> float:
    """Same as :func:`count_moment_Y` for the cut points, with kernel K against Lebesgue."""
    nodes = [_lebesgue_quadrature(hs, a, b, order) for a, b in intervals]
    if any(x.size == 0 for x, _ in nodes):
        return 0.0
    kk = KernelK(hs)
    return _factorial_moment(nodes, kk.factors)


def prob_no_root_right_of(a: float, hs: HarmonicSystem, order: int = 64) -> float:
    """P(no root in (a, sup I)) = u_down(+inf) * integral of u_up over (inf I, a] against m kappa."""
    x, w = _root_quadrature(hs, hs.gen.lo, a, order)
    mk = hs.gen.kappa.weighted(hs.gen.m)
    extra = mk.atom_mass(a)
    val = float(np.dot(w, hs.up.values(x)[0])) if x.size else 0.0
    if extra:
        val += extra * hs.u_up(a)
    return hs.u_down_at_plus_inf * val


def resample_Z_given_Y(cfg: PointConfig, hs: HarmonicSystem, rng=None) -> PointConfig:
    """Redraw each cut point uniformly (for the scale measure) in its gap between roots."""
    rng = as_rng(rng)
    Y = cfg.Y
    Z = np.array([scale_uniform(hs, a, b, rng) for a, b in zip(Y[:-1], Y[1:])])
    return PointConfig(Y.copy(), Z, info=dict(cfg.info))


def resample_Y_given_Z(cfg: PointConfig, hs: HarmonicSystem, rng=None) -> PointConfig:
    """Redraw each root from ``m kappa`` restricted to its gap between cut points.

    A killing end is always a root, so the extreme gap next to it is forced.
    """
    rng = as_rng(rng)
    gen = hs.gen
    mk: RadonMeasure = gen.kappa.weighted(gen.m)
    edges = [gen.lo] + cfg.Z.tolist() + [gen.hi]
    kill_lo = math.isfinite(gen.lo) and gen.boundary[0] == KILLING
    kill_hi = math.isfinite(gen.hi) and gen.boundary[1] == KILLING
    Y = []
    last = len(edges) - 2
    for i, (a, b) in enumerate(zip(edges, edges[1:])):
        if i == 0 and kill_lo:
            Y.append(gen.lo)
        elif i == last and kill_hi:
            Y.append(gen.hi)
        else:
            Y.append(mk.sample(a, b, rng, (i == 0, i == last)))
    return PointConfig(np.array(Y), cfg.Z.copy(), info=dict(cfg.info))
