"""Glued-excursion paths, loop extraction, and slicing of transient paths into loops."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.generator import GeneratorSpec
from .core.harmonic import HarmonicSystem
from .occupation import OccupationField
from .rng import as_rng

_CHUNK = 1 << 18


@dataclass
class SamplePath:
    times: np.ndarray
    values: np.ndarray
    running_min: np.ndarray
    dt: float
    info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.values.size


@dataclass
class RootedLoop:
    """A loop cut out of a path: indices ``start_index..end_index`` inclusive."""

    start_index: int
    end_index: int
    min: float
    max: float
    duration: float
    t_start: float = 0.0

    def values(self, path: SamplePath) -> np.ndarray:
        return path.values[self.start_index:self.end_index + 1]


def sample_xi(alpha: float, x0: float, stop_level: float, dt: float | None = None, rng=None,
              max_steps: int = 200_000_000, truncate: bool = False) -> SamplePath:
    """Path of loops glued above a running minimum decreasing at rate 1/alpha per unit local time.

    Built from one Gaussian walk W: ``xi = x0 + (W - min W) + min W / alpha``.
    The path stops when its running minimum reaches ``stop_level``. The
    hitting time is heavy tailed; past ``max_steps`` the path either raises
    or, with ``truncate=True``, stops early with ``info['truncated']`` set.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not stop_level < x0:
        raise ValueError("stop_level must lie below x0")
    if dt is None:
        dt = 1e-4 * (x0 - stop_level) ** 2
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = as_rng(rng)
    target = alpha * (stop_level - x0)
    sd = math.sqrt(dt)
    chunks = [np.zeros(1)]
    last, low, n = 0.0, 0.0, 1
    while low > target:
        if n > max_steps:
            if truncate:
                break
            raise RuntimeError(f"path exceeded {max_steps} steps before reaching the stop level")
        w = last + np.cumsum(rng.standard_normal(_CHUNK) * sd)
        m = np.minimum.accumulate(np.minimum(w, low))
        hit = np.flatnonzero(m <= target)
        if hit.size:
            w = w[:hit[0] + 1]
        chunks.append(w)
        last, low = float(w[-1]), float(min(low, w.min()))
        n += w.size
    W = np.concatenate(chunks)
    mW = np.minimum.accumulate(W)
    values = x0 + (W - mW) + mW / alpha
    theta = x0 + mW / alpha
    times = np.arange(W.size) * dt
    info = {"alpha": alpha, "x0": x0, "stop_level": stop_level, "truncated": bool(low > target)}
    return SamplePath(times, values, theta, dt, info)


def extract_loops(path: SamplePath, min_steps: int = 4) -> list[RootedLoop]:
    """Excursions of the path above its running minimum, by decreasing minimum.

    A loop starts at a running-minimum record and ends at the first later
    point at or below that record. Loops shorter than ``min_steps`` steps and
    an unfinished final excursion are dropped and counted in ``path.info``.
    """
    v = path.values
    theta = np.minimum.accumulate(v)
    above = v > theta
    if not above.any():
        path.info.update(short_loops=0, unfinished=0)
        return []
    d = np.diff(above.astype(np.int8))
    starts = np.flatnonzero(d == 1) + 1
    ends = np.flatnonzero(d == -1)
    if above[0]:
        starts = np.concatenate([[0], starts])
    unfinished = 0
    if above[-1]:
        unfinished = 1
        starts = starts[:-1]
    loops = []
    short = 0
    for s, e in zip(starts.tolist(), ends.tolist()):
        a, b = max(s - 1, 0), e + 1
        if b - a < min_steps:
            short += 1
            continue
        loops.append(RootedLoop(a, b, float(theta[a]), float(v[s:e + 1].max()), (b - a) * path.dt,
                                float(path.times[a])))
    path.info.update(short_loops=short, unfinished=unfinished)
    return loops


def reglue(path: SamplePath, loops: list[RootedLoop]) -> np.ndarray:
    """Rebuild the path from its loops and its running-minimum points."""
    out = np.array(path.running_min, copy=True)
    covered = np.zeros(out.size, bool)
    for lp in sorted(loops, key=lambda l: -l.min):
        out[lp.start_index:lp.end_index + 1] = path.values[lp.start_index:lp.end_index + 1]
        covered[lp.start_index:lp.end_index + 1] = True
    rest = ~covered
    out[rest] = path.values[rest]
    return out


def _invert_ratio(hs: HarmonicSystem, target: np.ndarray) -> np.ndarray:
    """Solve u_up(x)/u_down(x) = target by bracketed Newton, vectorized."""
    target = np.asarray(target, float)
    xs = hs.grid.x

    def ratio(x):
        return hs.up.values(x)[0] / hs.down.values(x)[0]

    r = ratio(xs)
    a = np.full(target.shape, xs[0] - 1.0)
    b = np.full(target.shape, xs[-1] + 1.0)
    a = np.maximum(a, hs.domain[0])
    b = np.minimum(b, hs.domain[1])
    # widen brackets beyond the table
    for _ in range(200):
        lo_bad = ratio(a) > target
        hi_bad = ratio(b) < target
        if not (lo_bad.any() or hi_bad.any()):
            break
        a = np.where(lo_bad, np.maximum(a - 2.0 * (b - a), hs.domain[0]), a)
        b = np.where(hi_bad, np.minimum(b + 2.0 * (b - a), hs.domain[1]), b)
    x = np.clip(np.interp(target, r, xs), a, b)
    w_const = hs.gen.w.values[0] if hs.gen.w.is_constant else None
    for _ in range(100):
        uu, ud = hs.up.values(x)[0], hs.down.values(x)[0]
        f = uu / ud - target
        a = np.where(f < 0, x, a)
        b = np.where(f > 0, x, b)
        w = w_const if w_const is not None else np.array([hs.w_at(t) for t in x])
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - f * ud ** 2 / w
        bad = ~np.isfinite(xn) | (xn <= a) | (xn >= b)
        xn = np.where(bad, 0.5 * (a + b), xn)
        done = np.abs(xn - x) <= 1e-14 * (1.0 + np.abs(x))
        x = xn
        if np.all(done | (f == 0)):
            break
    return x


def transform_to_generator(path: SamplePath, gen: GeneratorSpec | None = None,
                           hs: HarmonicSystem | None = None) -> SamplePath:
    """Carry a glued Brownian path over to the loops of ``gen``.

    Levels are mapped through the inverse of the h-transformed scale
    ``S(x) = 2 x0 + u_up/u_down (x) - u_up/u_down (x0)`` and time runs at
    rate ``2 m u_down**2 / (w / u_down**2)``. Without ``hs`` (plain Brownian
    motion) the map is the identity.
    """
    if hs is None:
        return SamplePath(path.times.copy(), path.values.copy(), path.running_min.copy(), path.dt, dict(path.info))
    gen = hs.gen if gen is None else gen
    x0 = float(path.info.get("x0", path.values[0]))
    r0 = hs.u_up(x0) / hs.u_down(x0)
    target = r0 + 2.0 * (path.values - x0)
    lo = hs.domain[0]
    r_lo = hs.u_up_at_minus_inf / hs.u_down(lo) if math.isfinite(lo) else 0.0
    if target.min() <= r_lo:
        raise ValueError("the path goes below the bottom of the transformed scale; raise stop_level")
    x = _invert_ratio(hs, target)
    ud = hs.down.values(x)[0]
    m = np.array([gen.m(t) for t in x]) if not gen.m.is_constant else gen.m.values[0]
    w = np.array([gen.w(t) for t in x]) if not gen.w.is_constant else gen.w.values[0]
    rate = 2.0 * m * ud ** 4 / w
    times = np.concatenate([[0.0], np.cumsum(rate[:-1] * path.dt)])
    theta = np.minimum.accumulate(x)
    info = dict(path.info, transformed=True)
    return SamplePath(times, x, theta, path.dt, info)


def occupation_from_path(path: SamplePath, gen: GeneratorSpec, edges: np.ndarray) -> OccupationField:
    """Occupation time per bin divided by ``m * binwidth`` (a local-time estimate at bin centres)."""
    edges = np.asarray(edges, float)
    dts = np.diff(path.times, append=path.times[-1] + (path.times[-1] - path.times[-2] if path.times.size > 1 else path.dt))
    occ, _ = np.histogram(path.values, bins=edges, weights=dts)
    centres = 0.5 * (edges[:-1] + edges[1:])
    m = np.array([gen.m(c) for c in centres])
    return OccupationField(centres, occ / (m * np.diff(edges)), alpha=float(path.info.get("alpha", 1.0)))


def pd01_sticks(rng, eps: float = 0.0, max_sticks: int = 10_000) -> np.ndarray:
    """Stick-breaking with uniform factors, down to sticks of size ``eps``."""
    rng = as_rng(rng)
    out = []
    rest = 1.0
    while rest > eps and len(out) < max_sticks:
        u = rng.random()
        out.append(rest * u)
        rest *= 1.0 - u
    if eps == 0.0 or rest > 0:
        out.append(rest)
    return np.array(out)


def local_time_at(path: SamplePath, x: float, gen: GeneratorSpec | None = None, band: float | None = None) -> np.ndarray:
    """Cumulative local time at level x along the path (band estimator)."""
    if band is None:
        band = 2.0 * math.sqrt(path.dt)
    m = 1.0 if gen is None else gen.m(x)
    dts = np.diff(path.times, prepend=0.0)
    near = np.abs(path.values - x) < 0.5 * band
    return np.cumsum(near * dts) / (m * band)


def slice_at_point(path: SamplePath, x: float, rng=None, gen: GeneratorSpec | None = None,
                   min_steps: int = 4) -> list[RootedLoop]:
    """Cut a transient path started at x into loops.

    Up to the last visit to x, the local time at x is split by a
    Poisson-Dirichlet(0, 1) partition and each piece becomes a loop through
    x. After the last visit, the excursions away from the future extremum
    (future infimum if the path ends above x, future supremum otherwise)
    are the remaining loops.
    """
    rng = as_rng(rng)
    v = path.values
    step = math.sqrt(path.dt) * 4.0
    hit = np.flatnonzero(np.abs(v - x) <= step)
    if hit.size == 0:
        raise ValueError(f"the path never visits {x}")
    last = int(hit[-1])
    loops: list[RootedLoop] = []
    lt = local_time_at(path, x, gen)
    total = lt[last]
    if total > 0:
        cuts = [total]
        rest = total
        floor = lt[np.flatnonzero(lt > 0)[0]] if np.any(lt > 0) else total
        while rest > floor:
            rest *= rng.random()
            cuts.append(rest)
        cuts.append(0.0)
        idx = np.searchsorted(lt[:last + 1], cuts, side="left")
        idx[0] = last
        idx[-1] = 0
        for a, b in zip(idx[::-1][:-1], idx[::-1][1:]):
            a, b = int(a), int(b)
            if b - a >= min_steps:
                seg = v[a:b + 1]
                loops.append(RootedLoop(a, b, float(seg.min()), float(seg.max()), (b - a) * path.dt,
                                        float(path.times[a])))
    tail = v[last:]
    if tail.size > 1:
        up = tail[-1] >= x
        ref = np.minimum.accumulate(tail[::-1])[::-1] if up else np.maximum.accumulate(tail[::-1])[::-1]
        away = tail > ref if up else tail < ref
        d = np.diff(away.astype(np.int8))
        starts = np.flatnonzero(d == 1) + 1
        ends = np.flatnonzero(d == -1)
        if away[0]:
            starts = np.concatenate([[0], starts])
        if away[-1]:
            ends = np.concatenate([ends, [away.size - 1]])
        for s, e in zip(starts.tolist(), ends.tolist()):
            a, b = last + max(s - 1, 0), last + e + 1
            b = min(b, v.size - 1)
            if b - a < min_steps:
                continue
            seg = v[a:b + 1]
            loops.append(RootedLoop(a, b, float(seg.min()), float(seg.max()), (b - a) * path.dt,
                                    float(path.times[a])))
    return loops


# Brownian bridges and the cyclic shift at the minimum

def brownian_bridges(n_steps: int, size: int, rng) -> np.ndarray:
    """Brownian bridges from 0 to 0 on [0, 1], sampled at n_steps + 1 times."""
    rng = as_rng(rng)
    t = np.linspace(0.0, 1.0, n_steps + 1)
    inc = rng.standard_normal((size, n_steps)) * math.sqrt(1.0 / n_steps)
    w = np.concatenate([np.zeros((size, 1)), np.cumsum(inc, axis=1)], axis=1)
    return w - t[None, :] * w[:, -1:]


def vervaat(bridge: np.ndarray) -> np.ndarray:
    """Cyclic shift of a bridge (periodic, last point equal to the first) so it starts at its minimum."""
    b = np.atleast_2d(bridge)
    core = b[:, :-1]
    k = np.argmin(core, axis=1)
    n = core.shape[1]
    idx = (k[:, None] + np.arange(n)[None, :]) % n
    shifted = np.take_along_axis(core, idx, axis=1) - core[np.arange(core.shape[0]), k][:, None]
    out = np.concatenate([shifted, shifted[:, :1]], axis=1)
    return out if bridge.ndim == 2 else out[0]


def brownian_excursions(n_steps: int, size: int, rng) -> np.ndarray:
    """Normalized Brownian excursions: norm of a 3-dimensional Brownian bridge."""
    rng = as_rng(rng)
    sq = sum(brownian_bridges(n_steps, size, rng) ** 2 for _ in range(3))
    return np.sqrt(sq)
