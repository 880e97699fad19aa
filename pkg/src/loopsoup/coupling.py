"""Monotone couplings of root / cut-point configurations when killing increases.

Everything here is built from one move, :func:`insert_point`, which forces a
new root into a configuration while keeping the law exact (conditioned on
the root being present).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core.generator import KILLING, GeneratorSpec
from .core.harmonic import HarmonicSystem, harmonic_pair, restricted_harmonics
from .core.solver import DEFAULT_H_MAX
from .core.invert import invert_nondecreasing
from .core.measures import INF, PiecewiseConstant, RadonMeasure
from .dpp.chain import chain_sample
from .dpp.config import PointConfig
from .dpp.wilson import wilson_sample
from .rng import as_rng


class CouplingError(ValueError):
    pass


def _invert_u(hs: HarmonicSystem, increasing: bool, lo: float, hi: float, target: float) -> float:
    """Point t in (lo, hi) with u_up(t) = target (or u_down(lo) - u_down(t) = target)."""
    up, down, grid = hs.up, hs.down, hs.grid
    if increasing:
        def nodes(i, j, side):
            return up.u[i:j]

        def value(t, side):
            return hs.pair_state(t)[0]

        def slope(t):
            return hs.w_at(t) * hs.pair_state(t)[1]
    else:
        base = hs.pair_state(lo)[2]

        def nodes(i, j, side):
            return base - down.u[i:j]

        def value(t, side):
            return base - hs.pair_state(t)[2]

        def slope(t):
            return -hs.w_at(t) * hs.pair_state(t)[3]
    t = invert_nondecreasing(hs, lo, hi, target, nodes, value, slope)
    return min(max(t, lo), hi)


def insert_point(cfg: PointConfig, hs: HarmonicSystem, y0: float, rng=None) -> PointConfig:
    """Force y0 into the roots, keeping the configuration exact given that y0 is a root.

    If the nearest root y' to the left is not separated from y0 by a cut
    point, y' is moved to y0 with probability u_up(y')/u_up(y0), otherwise a
    cut point is added in (y', y0) with distribution function proportional to
    u_up - u_up(y'). The mirror rule with u_down applies on the right.
    """
    rng = as_rng(rng)
    y0 = float(y0)
    Y, Z = cfg.Y, cfg.Z
    if Y.size == 0:
        return PointConfig(np.array([y0]), np.zeros(0), info=dict(cfg.info))
    iz = int(np.searchsorted(Z, y0))
    if iz < Z.size and Z[iz] == y0:
        raise ValueError(f"{y0} is already a cut point")
    iy = int(np.searchsorted(Y, y0))
    if iy < Y.size and Y[iy] == y0:
        return cfg.copy()
    if iy == Y.size:
        side = "left"
    elif iy == 0:
        side = "right"
    else:
        side = "left" if Z[iy - 1] > y0 else "right"
    Ynew, Znew = Y.tolist(), Z.tolist()
    if side == "left":
        yp = Y[iy - 1]
        u0, up_ = hs.u_up(y0), hs.u_up(yp)
        if up_ >= u0 or rng.random() * u0 < up_:
            Ynew[iy - 1] = y0
        else:
            target = up_ + rng.random() * (u0 - up_)
            z = _invert_u(hs, True, yp, y0, target)
            z = min(max(z, np.nextafter(yp, y0)), np.nextafter(y0, yp))
            Ynew.insert(iy, y0)
            Znew.insert(bisect.bisect_left(Znew, z), z)
    else:
        yp = Y[iy]
        u0, up_ = hs.u_down(y0), hs.u_down(yp)
        if up_ >= u0 or rng.random() * u0 < up_:
            Ynew[iy] = y0
        else:
            target = rng.random() * (u0 - up_)
            z = _invert_u(hs, False, y0, yp, target)
            z = min(max(z, np.nextafter(y0, yp)), np.nextafter(yp, y0))
            Ynew.insert(iy, y0)
            Znew.insert(bisect.bisect_left(Znew, z), z)
    return PointConfig(np.array(Ynew), np.array(Znew), info=dict(cfg.info))


def couple_atom(cfg: PointConfig, gen: GeneratorSpec, c: float, y0: float, rng=None,
                hs: HarmonicSystem | None = None) -> PointConfig:
    """Turn a configuration for ``gen`` into one for ``gen`` with ``c`` more killing at y0."""
    rng = as_rng(rng)
    if c < 0:
        raise ValueError("c must be nonnegative")
    if c == 0:
        return cfg.copy()
    hs = harmonic_pair(gen) if hs is None else hs
    g = hs.green(y0, y0)
    cm = c * gen.m(y0)
    p = cm * g / (1.0 + cm * g)
    assert 0.0 <= p <= 1.0
    if rng.random() < p:
        return insert_point(cfg, hs, y0, rng)
    return cfg.copy()


# small perturbations

def _diff_measure(hs: HarmonicSystem, hs_t: HarmonicSystem) -> RadonMeasure:
    d = hs_t.gen.kappa.difference(hs.gen.kappa)
    return d.weighted(hs.gen.m)


def _quad(hs: HarmonicSystem, mu: RadonMeasure, a: float, b: float, closed, order: int = 48):
    cuts = sorted({p for p in hs.gen.potential.breakpoints() + mu.breakpoints() if a < p < b})
    edges = [a] + cuts + [b]
    xs, ws = [], []
    for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
        left_closed = closed[0] if k == 0 else True
        right_closed = closed[1] if k == len(edges) - 2 else False
        x, w = mu.restrict(lo, hi, (left_closed, right_closed)).quadrature(lo, hi, order)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def v_weight(hs: HarmonicSystem, hs_t: HarmonicSystem, y: float, order: int = 48) -> float:
    """Density (against m times the killing increment) of the single new root when there is exactly one."""
    mu = _diff_measure(hs, hs_t)
    uu, ud = hs.u_up(y), hs.u_down(y)
    xl, wl = _quad(hs, mu, -INF if math.isinf(hs.gen.lo) else hs.gen.lo, y, (True, False), order)
    xr, wr = _quad(hs, mu, y, INF if math.isinf(hs.gen.hi) else hs.gen.hi, (False, True), order)
    left = hs_t.u_up(y)
    if xl.size:
        left -= float(np.dot(wl, hs_t.up.values(xl)[0] * (hs.down.values(xl)[0] * uu - hs.up.values(xl)[0] * ud)))
    right = hs_t.u_down(y)
    if xr.size:
        right -= float(np.dot(wr, hs_t.down.values(xr)[0] * (hs.up.values(xr)[0] * ud - hs.down.values(xr)[0] * uu)))
    return left * right


def v_constants(hs: HarmonicSystem, hs_t: HarmonicSystem) -> tuple[float, float]:
    """(c1, c2) with u~_up = c1 u_up left of the increment and u~_down = c2 u_down right of it."""
    mu = _diff_measure(hs, hs_t)
    lo, hi = mu.support_hull()
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise CouplingError("the killing increment must be compactly supported")
    a = max(lo - 1.0, hs.gen.lo) if math.isinf(hs.gen.lo) else 0.5 * (hs.gen.lo + lo) if lo > hs.gen.lo else lo
    b = min(hi + 1.0, hs.gen.hi) if math.isinf(hs.gen.hi) else 0.5 * (hs.gen.hi + hi) if hi < hs.gen.hi else hi
    if a == lo and mu.atom_mass(lo) > 0:
        raise CouplingError("increment charges the left end of the interval")
    if b == hi and mu.atom_mass(hi) > 0:
        raise CouplingError("increment charges the right end of the interval")
    return hs_t.u_up(a) / hs.u_up(a), hs_t.u_down(b) / hs.u_down(b)


def v_weight_proportional(hs: HarmonicSystem, hs_t: HarmonicSystem, y: float) -> float:
    c1, c2 = v_constants(hs, hs_t)
    return c1 * c2 * hs.u_up(y) * hs.u_down(y)


def _sample_green_weighted(hs: HarmonicSystem, mu: RadonMeasure, rng: np.random.Generator) -> float:
    """A point from G(y, y) mu(dy), normalized, by rejection from mu."""
    lo, hi = mu.support_hull()
    pts = [x for x, _ in mu.atoms]
    for p in mu.density:
        pts.extend(np.linspace(p[0], p[1], 257).tolist())
    pts = [p for p in pts if math.isfinite(p)]
    gmax = 1.05 * float(np.max(hs.green_diag(np.array(pts)))) if pts else 1.0
    while True:
        y = mu.sample(lo, hi, rng, (True, True))
        if rng.random() * gmax <= hs.green(y, y):
            return y


def couple_small(cfg: PointConfig, gen: GeneratorSpec, kappa_tilde: RadonMeasure, rng=None,
                 hs: HarmonicSystem | None = None, order: int = 48) -> PointConfig:
    """Approximate coupling that adds at most one root, chosen with the weight v."""
    rng = as_rng(rng)
    hs = harmonic_pair(gen) if hs is None else hs
    gen_t = gen.with_kappa(kappa_tilde)
    hs_t = harmonic_pair(gen_t)
    mu = _diff_measure(hs, hs_t)
    if mu.is_zero:
        return cfg.copy()
    c1, c2 = v_constants(hs, hs_t)
    x, w = _quad(hs, mu, *mu.support_hull(), (True, True), order)
    p = c1 * c2 * float(np.dot(w, hs.green_diag(x)))
    if rng.random() >= p:
        return cfg.copy()
    y = _sample_green_weighted(hs, mu, rng)
    return insert_point(cfg, hs, y, rng)


# exact coupling along a path of killing measures

@dataclass
class CouplingPath:
    """Increasing path q -> kappa_q from ``base`` at q=0.

    Each component ``(mu, q_lo, q_hi)`` adds ``mu`` linearly while q runs
    over ``[q_lo, q_hi]``; the two-variable measure Lambda is
    ``mu(dy) dq / (q_hi - q_lo)`` summed over components.
    """

    base: RadonMeasure
    components: list[tuple[RadonMeasure, float, float]] = field(default_factory=list)

    def __post_init__(self):
        for mu, a, b in self.components:
            if not (0.0 <= a < b <= 1.0):
                raise CouplingError(f"component interval [{a}, {b}] must satisfy 0 <= lo < hi <= 1")

    def kappa_at(self, q: float) -> RadonMeasure:
        out = self.base
        for mu, a, b in self.components:
            frac = min(max((q - a) / (b - a), 0.0), 1.0)
            if frac > 0:
                out = out + mu.scale(frac)
        return out

    @property
    def target(self) -> RadonMeasure:
        return self.kappa_at(1.0)

    def increment(self) -> RadonMeasure:
        out = RadonMeasure.zero()
        for mu, _, _ in self.components:
            out = out + mu
        return out

    @classmethod
    def straight(cls, kappa: RadonMeasure, kappa_tilde: RadonMeasure) -> "CouplingPath":
        return cls(kappa, [(kappa_tilde.difference(kappa), 0.0, 1.0)])


def couple_path(cfg: PointConfig, gen: GeneratorSpec, path: CouplingPath, rng=None,
                cache: dict | None = None, h_max: float = DEFAULT_H_MAX) -> PointConfig:
    """Exact coupling: turn a configuration for ``path.base`` into one for ``path.target``.

    New roots are the points of a Poisson process with intensity
    ``G_q(y, y) m(y) Lambda(dy, dq)``, inserted in increasing q with the
    harmonic pair of kappa_q. The process is sampled by thinning against the
    Green's function at the start of each component. An atom whose q-range
    meets no other component reduces to a single Bernoulli insertion.

    ``cache`` maps q to harmonic systems and may be shared between calls;
    ``h_max`` is the grid step used for them.
    """
    rng = as_rng(rng)
    cache = {} if cache is None else cache
    def hs_at(q: float) -> HarmonicSystem:
        if q not in cache:
            cache[q] = harmonic_pair(gen.with_kappa(path.kappa_at(q)), h_max=h_max)
        return cache[q]

    events: list[tuple[float, int, float, object]] = []
    comps = path.components
    for k, (mu, a, b) in enumerate(comps):
        if mu.is_zero:
            continue
        alone = all(b2 <= a or a2 >= b for j, (_, a2, b2) in enumerate(comps) if j != k)
        if alone and not mu.density and len(mu.atoms) == 1:
            y, mass = mu.atoms[0]
            events.append((a, 0, y, mass))
            continue
        env = hs_at(a)
        mm = mu.weighted(gen.m)
        x, w = _quad(env, mm, *mm.support_hull(), (True, True))
        total = float(np.dot(w, env.green_diag(x)))
        for _ in range(rng.poisson(total)):
            y = _sample_green_weighted(env, mm, rng)
            q = a + (b - a) * rng.random()
            events.append((q, 1, y, a))
    events.sort(key=lambda e: e[0])
    out = cfg.copy()
    for q, kind, y, extra in events:
        if kind == 0:
            hs = hs_at(q)
            g = hs.green(y, y)
            cm = extra * gen.m(y)
            if rng.random() * (1.0 + cm * g) < cm * g:
                out = insert_point(out, hs, y, rng)
        else:
            if np.any(out.Y == y):
                continue
            g0 = hs_at(extra).green(y, y)
            hs = hs_at(q)
            if rng.random() * g0 < hs.green(y, y):
                out = insert_point(out, hs, y, rng)
    return out


def strengthen_proportional(pair: tuple[PointConfig, PointConfig], gen: GeneratorSpec, c: float,
                            rng=None) -> tuple[PointConfig, PointConfig]:
    """Resample both root sets so that roots for kappa are contained in roots for c*kappa.

    Requires the cut points for kappa to be contained in those for c*kappa.
    Inside each gap of the coarse cut points, one fine gap is chosen with
    probability proportional to its kappa-mass and both roots are placed at
    the same point there; the other fine gaps get their own roots.
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    rng = as_rng(rng)
    cfg, cfg_t = pair
    Z, Zt = cfg.Z, cfg_t.Z
    if not np.all(np.isin(Z, Zt)):
        raise CouplingError("cut points of the weaker configuration must be contained in the stronger one")
    mk = gen.kappa.weighted(gen.m)
    kill_lo = math.isfinite(gen.lo) and gen.boundary[0] == KILLING
    kill_hi = math.isfinite(gen.hi) and gen.boundary[1] == KILLING
    edges_t = [gen.lo] + Zt.tolist() + [gen.hi]
    last = len(edges_t) - 2
    fine_roots = []
    fine_mass = []
    for i, (a, b) in enumerate(zip(edges_t, edges_t[1:])):
        closed = (i == 0, i == last)
        if i == 0 and kill_lo:
            fine_roots.append(gen.lo)
            fine_mass.append(1.0)
        elif i == last and kill_hi:
            fine_roots.append(gen.hi)
            fine_mass.append(1.0)
        else:
            fine_roots.append(mk.sample(a, b, rng, closed))
            fine_mass.append(mk.mass(a, b, closed))
    # coarse gaps are unions of consecutive fine gaps
    cut_idx = [0] + [int(np.searchsorted(Zt, z)) + 1 for z in Z] + [len(edges_t) - 1]
    Y = []
    for s, e in zip(cut_idx, cut_idx[1:]):
        masses = np.array(fine_mass[s:e], float)
        if s == 0 and kill_lo:
            Y.append(gen.lo)
            continue
        if e == len(edges_t) - 1 and kill_hi:
            Y.append(gen.hi)
            continue
        k = int(np.searchsorted(np.cumsum(masses), rng.random() * masses.sum(), side="right"))
        Y.append(fine_roots[s + min(k, e - s - 1)])
    return (PointConfig(np.array(Y), Z.copy(), info=dict(cfg.info)),
            PointConfig(np.array(fine_roots), Zt.copy(), info=dict(cfg_t.info)))


# conditional laws

def prob_no_cut_in(hs: HarmonicSystem, a: float, b: float) -> float:
    """P(no cut point in [a, b])."""
    uu_a, pu_a = hs.up.state(a, "left")
    ud_b, pd_b = hs.down.state(b, "right")
    mk = hs.gen.kappa.weighted(hs.gen.m).mass(a, b)
    return pu_a * ud_b - uu_a * pd_b + uu_a * ud_b * mk


def _shift_measure(mu: RadonMeasure, a: float, gap: float) -> RadonMeasure:
    """Collapse [a, a+gap] to the point a: shift everything right of it left by gap."""
    atoms = [(x if x <= a else x - gap, m) for x, m in mu.atoms if not a < x < a + gap]
    dens = []
    for x0, x1, c, s in mu.density:
        if x1 <= a:
            dens.append((x0, x1, c, s))
        elif x0 >= a + gap:
            dens.append((x0 - gap, x1 - gap, c, s))
        else:
            raise CouplingError("density pieces must not straddle the collapsed interval")
    return RadonMeasure(tuple(atoms), tuple(dens))


def _shift_step(f: PiecewiseConstant, a: float, gap: float) -> PiecewiseConstant:
    """Step function x -> f(x) left of a and f(x + gap) from a on."""
    if f.is_constant:
        return f
    breaks = sorted({x for x in f.breaks if x < a} | {a} | {x - gap for x in f.breaks if x > a + gap})
    probes = [breaks[0] - 1.0] + breaks
    vals = [f(x) if x < a else f(x + gap) for x in probes]
    keep_b, keep_v = [], [vals[0]]
    for x, v in zip(breaks, vals[1:]):
        if v != keep_v[-1]:
            keep_b.append(x)
            keep_v.append(v)
    return PiecewiseConstant(tuple(keep_b), tuple(keep_v))


@dataclass
class ConditionalSampler:
    """Exact sampler of the configuration under one of the conditionings below."""

    kind: str
    gen: GeneratorSpec
    hs: HarmonicSystem
    a: float
    b: float
    window: tuple[float, float] | None = None

    def _base(self, gen, hs, rng):
        try:
            return chain_sample(gen, hs, rng)
        except ValueError:
            if self.window is None:
                raise
            return wilson_sample(gen, rng=rng, hs=hs, window=self.window, closure="exact")

    def sample(self, rng=None) -> PointConfig:
        rng = as_rng(rng)
        if self.kind in ("root", "cut"):
            bc = "killed" if self.kind == "root" else "reflected"
            x0 = self.a
            parts = []
            for side in ("left", "right"):
                sub = restricted_harmonics(self.hs, x0, side, bc)
                parts.append(self._base(sub.gen, sub, rng))
            Y = np.concatenate([parts[0].Y, parts[1].Y])
            Z = np.concatenate([parts[0].Z, parts[1].Z])
            if self.kind == "root":
                Y = np.unique(Y)
            else:
                Z = np.concatenate([Z, [x0]])
            return PointConfig(Y, Z)
        if self.kind == "no_root":
            return self._base(self.gen, self.hs, rng)
        # no cut point in [a, b]: collapse the interval, sample, then expand
        gen, hs = self.gen, self.hs
        a, b = self.a, self.b
        gap = b - a
        k = gen.kappa
        mk = k.weighted(gen.m)
        collapsed = _shift_measure(k.exclude(a, b), a, gap)
        lo, hi = gen.interval
        cm = _shift_step(gen.m, a, gap)
        inside = mk.mass(a, b) / cm(a)
        if inside > 0:
            collapsed = collapsed + RadonMeasure.dirac(a, inside)
        cgen = replace(gen, interval=(lo, hi - gap if math.isfinite(hi) else hi),
                       m=cm, w=_shift_step(gen.w, a, gap), kappa=collapsed)
        cfg = self._base(cgen, harmonic_pair(cgen), rng)
        Y = [(y if y < a else y + gap) for y in cfg.Y.tolist() if y != a]
        if np.any(cfg.Y == a):
            Y.append(mk.sample(a, b, rng, (True, True)))
        Z = [(z if z < a else z + gap) for z in cfg.Z.tolist()]
        return PointConfig(np.array(Y), np.array(Z))


def conditional_restrict(gen: GeneratorSpec, kind: str, a: float, b: float | None = None,
                         hs: HarmonicSystem | None = None, window: tuple[float, float] | None = None) -> ConditionalSampler:
    """Sampler of the configuration conditioned on one event.

    ``kind`` is ``'root'`` (a is a root), ``'cut'`` (a is a cut point),
    ``'no_cut'`` (no cut point in [a, b]) or ``'no_root'`` (no root in [a, b]).
    """
    if kind not in ("root", "cut", "no_cut", "no_root"):
        raise ValueError("kind must be root, cut, no_cut or no_root")
    if kind in ("no_cut", "no_root") and (b is None or not b > a):
        raise ValueError("need an interval a < b")
    if kind == "no_root":
        gen = gen.with_kappa(gen.kappa.exclude(a, b))
        hs = None
    hs = harmonic_pair(gen) if hs is None else hs
    return ConditionalSampler(kind, gen, hs, float(a), float(a if b is None else b), window)


__all__ = [
    "ConditionalSampler", "CouplingError", "CouplingPath", "conditional_restrict", "couple_atom", "couple_path",
    "couple_small", "insert_point", "prob_no_cut_in", "strengthen_proportional", "v_constants", "v_weight",
    "v_weight_proportional",
]
