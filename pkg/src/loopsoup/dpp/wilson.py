"""Wilson's algorithm for the roots and cut points, with exact step laws.

Each step runs a killed diffusion from a start point until it is killed or
absorbed by an existing segment. Only the terminal point matters, and its
law is known in closed form inside the gap, so no path is simulated.
"""

from __future__ import annotations

import bisect
import heapq
import math
from typing import Iterable

import numpy as np

from ..core.generator import KILLING, ConfigError, GeneratorSpec
from ..core.harmonic import HarmonicSystem, harmonic_pair
from ..rng import as_rng
from .config import PointConfig
from .gaps import GapLaw, close_gap, scale_uniform


class WilsonState:
    """Disjoint sorted segments, each carrying the root it was killed at."""

    def __init__(self, gen: GeneratorSpec, hs: HarmonicSystem):
        self.gen, self.hs = gen, hs
        self.seg_l: list[float] = []
        self.seg_r: list[float] = []
        self.seg_y: list[float] = []
        for end, flag in zip(gen.interval, gen.boundary):
            if math.isfinite(end) and flag == KILLING:
                self._insert(end, end, end)
        self.steps = 0
        self.outcomes = {"left": 0, "right": 0, "killed": 0, "noop": 0}

    @classmethod
    def from_config(cls, gen, hs, cfg: PointConfig) -> "WilsonState":
        st = cls(gen, hs)
        st.seg_l, st.seg_r, st.seg_y = [], [], []
        segs = sorted(cfg.segments)
        if len(segs) != cfg.Y.size:
            raise ValueError("each segment must carry exactly one root")
        for (l, r), y in zip(segs, cfg.Y.tolist()):
            if not l <= y <= r:
                raise ValueError(f"root {y} outside its segment ({l}, {r})")
            st._insert(l, r, y)
        return st

    def _insert(self, l: float, r: float, y: float) -> None:
        k = bisect.bisect_left(self.seg_l, l)
        self.seg_l.insert(k, l)
        self.seg_r.insert(k, r)
        self.seg_y.insert(k, y)

    def gap_of(self, x: float) -> tuple[int, float, bool, float, bool] | None:
        """(index of right neighbour, a, a absorbing, b, b absorbing), or None inside a segment."""
        k = bisect.bisect_right(self.seg_l, x)
        if k > 0 and x <= self.seg_r[k - 1]:
            return None
        if k < len(self.seg_l) and x >= self.seg_l[k]:
            return None
        if k > 0:
            a, a_abs = self.seg_r[k - 1], True
        else:
            a, a_abs = self.gen.lo, False
        if k < len(self.seg_l):
            b, b_abs = self.seg_l[k], True
        else:
            b, b_abs = self.gen.hi, False
        return k, a, a_abs, b, b_abs

    def step(self, x: float, rng: np.random.Generator) -> str:
        self.steps += 1
        where = self.gap_of(x)
        if where is None:
            self.outcomes["noop"] += 1
            return "noop"
        k, a, a_abs, b, b_abs = where
        law = GapLaw(self.hs, a, a_abs, b, b_abs)
        if a_abs and b_abs and not law.D > 0:
            # gap below floating resolution: absorbed at once, scale is linear at this size
            side = "left" if rng.random() * (b - a) < b - x else "right"
            if side == "left":
                self.seg_r[k - 1] = x
            else:
                self.seg_l[k] = x
            self.outcomes[side] += 1
            return side
        pa, pb, kl, kr = law.outcome_masses(x)
        total = pa + pb + kl + kr
        v = rng.random() * total
        if v < pa:
            self.seg_r[k - 1] = x
            self.outcomes["left"] += 1
            return "left"
        v -= pa
        if v < pb:
            self.seg_l[k] = x
            self.outcomes["right"] += 1
            return "right"
        v -= pb
        if v < kl:
            y = law.sample_kill_left(x, rng)
            y = min(max(y, a), x)
            if a_abs and y <= a:
                self.seg_r[k - 1] = x
                self.outcomes["left"] += 1
                return "left"
            self._insert(y, x, y)
        else:
            y = law.sample_kill_right(x, rng)
            y = max(min(y, b), x)
            if b_abs and y >= b:
                self.seg_l[k] = x
                self.outcomes["right"] += 1
                return "right"
            self._insert(x, y, y)
        self.outcomes["killed"] += 1
        return "killed"

    def gaps(self) -> list[tuple[float, bool, float, bool]]:
        out = []
        n = len(self.seg_l)
        out.append((self.gen.lo, False, self.seg_l[0], True) if n else (self.gen.lo, False, self.gen.hi, False))
        for i in range(n - 1):
            out.append((self.seg_r[i], True, self.seg_l[i + 1], True))
        if n:
            out.append((self.seg_r[-1], True, self.gen.hi, False))
        return [g for g in out if g[2] > g[0]]

    def residual(self, lo: float, hi: float) -> float:
        return sum(max(0.0, min(b, hi) - max(a, lo)) for a, _, b, _ in self.gaps())

    def to_config(self) -> PointConfig:
        return PointConfig(np.array(self.seg_y), np.zeros(0), list(zip(self.seg_l, self.seg_r)))


def wilson_step(cfg: PointConfig, gen: GeneratorSpec, hs: HarmonicSystem, start: float,
                rng: np.random.Generator) -> PointConfig:
    """One step of the algorithm from ``start``; a start inside a segment is a no-op."""
    st = WilsonState.from_config(gen, hs, cfg)
    st.step(float(start), as_rng(rng))
    return st.to_config()


def _window(gen: GeneratorSpec, window: tuple[float, float] | None) -> tuple[float, float]:
    if window is not None:
        lo, hi = map(float, window)
        if not (gen.lo <= lo < hi <= gen.hi) or not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError(f"window {window} must be finite and inside the interval")
        return lo, hi
    lo, hi = gen.lo, gen.hi
    hull = gen.kappa.support_hull()
    if not math.isfinite(lo):
        if not math.isfinite(hull[0]):
            raise ConfigError("unbounded killing on an unbounded side needs an explicit window")
        lo = hull[0]
    if not math.isfinite(hi):
        if not math.isfinite(hull[1]):
            raise ConfigError("unbounded killing on an unbounded side needs an explicit window")
        hi = hull[1]
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _adaptive_starts(st: WilsonState, lo: float, hi: float):
    """Window ends first, then midpoints of the largest uncovered piece of the window."""
    yield lo
    yield hi
    heap: list[tuple[float, float, float]] = []

    def push_all():
        heap.clear()
        for a, _, b, _ in st.gaps():
            a2, b2 = max(a, lo), min(b, hi)
            if b2 > a2:
                heap.append((-(b2 - a2), a2, b2))
        heapq.heapify(heap)

    push_all()
    while heap:
        _, a, b = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        where = st.gap_of(mid)
        if where is None:
            continue
        _, ga, _, gb, _ = where
        a2, b2 = max(ga, lo), min(gb, hi)
        if (a2, b2) != (a, b):
            heapq.heappush(heap, (-(b2 - a2), a2, b2))
            continue
        yield mid
        for l, r in ((a, mid), (mid, b)):
            w = st.gap_of(0.5 * (l + r))
            if w is None:
                continue
            l2, r2 = max(w[1], lo), min(w[3], hi)
            if r2 > l2:
                heapq.heappush(heap, (-(r2 - l2), l2, r2))
        # pieces split away from (a, b) by the new segment are re-discovered lazily
        if not heap:
            push_all()


def wilson_sample(gen: GeneratorSpec, starts: Iterable[float] | None = None, n_steps: int = 100_000,
                  rng=None, hs: HarmonicSystem | None = None, window: tuple[float, float] | None = None,
                  gap_tol: float | None = None, closure: str = "uniform") -> PointConfig:
    """Run the algorithm until the uncovered part of the window is below ``gap_tol``.

    ``starts`` defaults to an adaptive sequence (window ends, then midpoints
    of the largest uncovered gap). ``closure='uniform'`` puts one cut point,
    uniform for the scale measure, in each remaining gap between segments;
    ``closure='exact'`` fills each remaining gap with an exact renewal chain
    of roots and cut points, which makes the output exact on the window.
    """
    if closure not in ("uniform", "exact"):
        raise ConfigError("closure must be 'uniform' or 'exact'")
    rng = as_rng(rng)
    lo, hi = _window(gen, window)
    if hs is None:
        hs = harmonic_pair(gen, window=(lo, hi))
    tol = 1e-4 * (hi - lo) if gap_tol is None else float(gap_tol)
    st = WilsonState(gen, hs)
    seq = _adaptive_starts(st, lo, hi) if starts is None else iter(starts)
    stopped = "n_steps"
    residual = st.residual(lo, hi)
    for _ in range(int(n_steps)):
        if residual < tol:
            stopped = "residual"
            break
        try:
            x = float(next(seq))
        except StopIteration:
            stopped = "starts_exhausted"
            break
        if st.step(x, rng) != "noop":
            residual = st.residual(lo, hi)
    else:
        residual = st.residual(lo, hi)
        if residual < tol:
            stopped = "residual"

    Y = list(st.seg_y)
    Z: list[float] = []
    for i in range(len(st.seg_l) - 1):
        a, b = st.seg_r[i], st.seg_l[i + 1]
        if closure == "exact" and b > a:
            roots, cuts = close_gap(hs, a, b, rng)
            Y.extend(roots)
            Z.extend(cuts)
        else:
            Z.append(scale_uniform(hs, a, b, rng) if b > a else a)
    cfg = PointConfig(np.array(Y), np.array(Z), list(zip(st.seg_l, st.seg_r)))
    cfg.info.update(window=(lo, hi), residual=residual, gap_tol=tol, stopped=stopped,
                    steps=st.steps, outcomes=dict(st.outcomes), closure=closure)
    return cfg
