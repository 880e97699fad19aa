"""Radon measures on the line: finitely many atoms plus a piecewise-linear density."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

INF = math.inf

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    if order not in _GL_CACHE:
        t, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = (0.5 * (t + 1.0), 0.5 * w)
    return _GL_CACHE[order]


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewiseConstant:
    """Positive right-continuous step function.

    ``values[i]`` holds on ``[breaks[i-1], breaks[i])`` with ``breaks[-1] = -inf``
    implied, so ``len(values) == len(breaks) + 1``.
    """

    breaks: tuple[float, ...] = ()
    values: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise MeasureError("need exactly one more value than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise MeasureError("breakpoints must be strictly increasing")
        if any(not (v > 0 and math.isfinite(v)) for v in self.values):
            raise MeasureError("piecewise function must be positive and finite")

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls((), (float(value),))

    def __call__(self, x: float) -> float:
        return self.values[bisect.bisect_right(self.breaks, x)]

    def array(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.breaks), x, side="right")
        return np.asarray(self.values)[idx]

    @property
    def is_constant(self) -> bool:
        return not self.breaks

    def integral(self, a: float, b: float) -> float:
        """Integral over [a, b]; negative if b < a."""
        if b < a:
            return -self.integral(b, a)
        total = 0.0
        lo = a
        for brk, val in zip(self.breaks, self.values):
            if brk <= lo:
                continue
            hi = min(brk, b)
            total += val * (hi - lo)
            lo = hi
            if lo >= b:
                return total
        return total + self.values[-1] * (b - lo)

    def inverse_integral(self, a: float, target: float) -> float:
        """Point x >= a with integral(a, x) == target (target >= 0)."""
        lo = a
        remaining = target
        for brk, val in zip(self.breaks, self.values):
            if brk <= lo:
                continue
            chunk = val * (brk - lo)
            if chunk >= remaining:
                return lo + remaining / val
            remaining -= chunk
            lo = brk
        return lo + remaining / self.values[-1]


@dataclass(frozen=True)
class RadonMeasure:
    """Positive measure: ``atoms`` as (x, mass), ``density`` as (x_lo, x_hi, c, slope).

    The density on ``[x_lo, x_hi)`` is ``c + slope*(x - x_lo)``. A piece may be
    unbounded only if its slope is zero, which is how uniform killing on a
    half-line or the whole line is written.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    density: tuple[tuple[float, float, float, float], ...] = ()
    _atom_x: tuple[float, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple(sorted((float(x), float(m)) for x, m in self.atoms if m != 0.0))
        merged: list[list[float]] = []
        for x, m in atoms:
            if not math.isfinite(x) or not math.isfinite(m):
                raise MeasureError(f"non-finite atom ({x}, {m})")
            if m < 0:
                raise MeasureError(f"negative atom mass {m} at {x}")
            if merged and merged[-1][0] == x:
                merged[-1][1] += m
            else:
                merged.append([x, m])
        pieces = tuple(sorted(tuple(float(v) for v in p) for p in self.density))
        for lo, hi, c, s in pieces:
            if not hi > lo:
                raise MeasureError(f"empty density piece [{lo}, {hi})")
            if math.isnan(c) or math.isnan(s) or not math.isfinite(c):
                raise MeasureError("density coefficients must be finite")
            if (math.isinf(lo) or math.isinf(hi)) and s != 0.0:
                raise MeasureError("an unbounded density piece must have zero slope")
            end = c + s * (hi - lo) if math.isfinite(hi - lo) else c
            if c < -1e-14 or end < -1e-14:
                raise MeasureError(f"density negative on [{lo}, {hi})")
        for (_, hi1, _, _), (lo2, _, _, _) in zip(pieces, pieces[1:]):
            if lo2 < hi1:
                raise MeasureError("density pieces overlap")
        pieces = tuple(p for p in pieces if not (p[2] == 0.0 and p[3] == 0.0))
        object.__setattr__(self, "atoms", tuple((x, m) for x, m in merged))
        object.__setattr__(self, "density", pieces)
        object.__setattr__(self, "_atom_x", tuple(x for x, _ in merged))

    # construction helpers

    @classmethod
    def zero(cls) -> "RadonMeasure":
        return cls()

    @classmethod
    def dirac(cls, x: float, mass: float = 1.0) -> "RadonMeasure":
        return cls(atoms=((x, mass),))

    @classmethod
    def uniform(cls, c: float, lo: float = -INF, hi: float = INF) -> "RadonMeasure":
        return cls(density=((lo, hi, c, 0.0),))

    @classmethod
    def lattice(cls, c: float, lo: int, hi: int) -> "RadonMeasure":
        """Mass ``c`` at every integer in ``[lo, hi]``."""
        return cls(atoms=tuple((float(j), c) for j in range(lo, hi + 1)))

    # queries

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.density

    def atom_mass(self, x: float) -> float:
        i = bisect.bisect_left(self._atom_x, x)
        if i < len(self._atom_x) and self._atom_x[i] == x:
            return self.atoms[i][1]
        return 0.0

    def density_at(self, x: float) -> float:
        for lo, hi, c, s in self.density:
            if lo <= x < hi:
                return c + s * (x - lo) if s else c
        return 0.0

    def breakpoints(self) -> list[float]:
        pts = set(self._atom_x)
        for lo, hi, _, _ in self.density:
            for v in (lo, hi):
                if math.isfinite(v):
                    pts.add(v)
        return sorted(pts)

    def support_hull(self) -> tuple[float, float]:
        """Smallest closed interval carrying all the mass; (nan, nan) for the zero measure."""
        if self.is_zero:
            return (math.nan, math.nan)
        los = list(self._atom_x[:1]) + [p[0] for p in self.density]
        his = list(self._atom_x[-1:]) + [p[1] for p in self.density]
        return (min(los), max(his))

    def left_tail(self) -> float:
        """Constant density extending to -inf (0 if none)."""
        if self.density and math.isinf(self.density[0][0]):
            return self.density[0][2]
        return 0.0

    def right_tail(self) -> float:
        if self.density and math.isinf(self.density[-1][1]):
            return self.density[-1][2]
        return 0.0

    def _density_mass(self, a: float, b: float) -> float:
        total = 0.0
        for lo, hi, c, s in self.density:
            l, h = max(lo, a), min(hi, b)
            if h <= l:
                continue
            if math.isinf(h - l):
                return INF
            # integral of c + s (x - lo) over [l, h]
            total += (c + s * (0.5 * (l + h) - lo)) * (h - l)
        return total

    def mass(self, a: float = -INF, b: float = INF, closed: tuple[bool, bool] = (True, True)) -> float:
        """Mass of the interval from a to b; ``closed`` says whether each end is included."""
        if b < a:
            return 0.0
        i = bisect.bisect_left(self._atom_x, a) if closed[0] else bisect.bisect_right(self._atom_x, a)
        j = bisect.bisect_right(self._atom_x, b) if closed[1] else bisect.bisect_left(self._atom_x, b)
        atoms = sum(m for _, m in self.atoms[i:j]) if j > i else 0.0
        return atoms + self._density_mass(a, b)

    def total_mass(self) -> float:
        return self.mass()

    def first_moment_finite(self, side: str) -> bool:
        """Whether the integral of |x| over the given half-line is finite."""
        tail = self.right_tail() if side == "right" else self.left_tail()
        return tail == 0.0

    # algebra

    def __add__(self, other: "RadonMeasure") -> "RadonMeasure":
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        return RadonMeasure(atoms=self.atoms + other.atoms, density=_merge_densities(self.density, other.density, 1.0))

    def scale(self, factor: float) -> "RadonMeasure":
        if factor < 0:
            raise MeasureError("scale factor must be nonnegative")
        return RadonMeasure(
            atoms=tuple((x, factor * m) for x, m in self.atoms),
            density=tuple((lo, hi, factor * c, factor * s) for lo, hi, c, s in self.density),
        )

    def difference(self, other: "RadonMeasure", tol: float = 1e-12) -> "RadonMeasure":
        """``self - other``, which must be a positive measure."""
        atoms = dict(self.atoms)
        for x, m in other.atoms:
            left = atoms.get(x, 0.0) - m
            if left < -tol * max(1.0, m):
                raise MeasureError(f"difference has a negative atom at {x}")
            atoms[x] = max(left, 0.0)
        dens = _merge_densities(self.density, other.density, -1.0)
        for lo, hi, c, s in dens:
            end = c + s * (hi - lo) if math.isfinite(hi - lo) else c
            if c < -tol or end < -tol:
                raise MeasureError(f"difference has negative density on [{lo}, {hi})")
        dens = tuple((lo, hi, max(c, 0.0), s) for lo, hi, c, s in dens)
        return RadonMeasure(atoms=tuple(atoms.items()), density=dens)

    def restrict(self, a: float, b: float, closed: tuple[bool, bool] = (True, True)) -> "RadonMeasure":
        keep = []
        for x, m in self.atoms:
            inside_left = x >= a if closed[0] else x > a
            inside_right = x <= b if closed[1] else x < b
            if inside_left and inside_right:
                keep.append((x, m))
        dens = []
        for lo, hi, c, s in self.density:
            l, h = max(lo, a), min(hi, b)
            if h > l:
                dens.append((l, h, c + s * (l - lo) if s else c, s))
        return RadonMeasure(atoms=tuple(keep), density=tuple(dens))

    def exclude(self, a: float, b: float) -> "RadonMeasure":
        """Restriction to the complement of the closed interval [a, b]."""
        return self.restrict(-INF, a, (True, False)) + self.restrict(b, INF, (False, True))

    def weighted(self, weight: PiecewiseConstant) -> "RadonMeasure":
        """The measure ``weight(x) * self(dx)`` for a step function ``weight``."""
        if weight.is_constant:
            return self.scale(weight.values[0])
        atoms = tuple((x, weight(x) * m) for x, m in self.atoms)
        cuts = list(weight.breaks)
        dens = []
        for lo, hi, c, s in self.density:
            edges = [lo] + [b for b in cuts if lo < b < hi] + [hi]
            for l, h in zip(edges, edges[1:]):
                val = weight(l if math.isfinite(l) else h - 1.0)
                dens.append((l, h, val * (c + s * (l - lo) if s else c), val * s))
        return RadonMeasure(atoms=atoms, density=tuple(dens))

    # quadrature and sampling

    def quadrature(self, a: float = -INF, b: float = INF, order: int = 64, panel: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights integrating against this measure on [a, b].

        Atoms contribute themselves; every density piece gets Gauss-Legendre
        panels of ``order`` points (one panel per piece unless ``panel`` caps
        the panel width).
        """
        xs: list[np.ndarray] = []
        ws: list[np.ndarray] = []
        ax = np.array([x for x, _ in self.atoms if a <= x <= b])
        am = np.array([m for x, m in self.atoms if a <= x <= b])
        xs.append(ax)
        ws.append(am)
        t, wt = gauss_legendre(order)
        for lo, hi, c, s in self.density:
            l, h = max(lo, a), min(hi, b)
            if h <= l:
                continue
            if math.isinf(h - l):
                raise MeasureError("quadrature over an unbounded density piece")
            n = 1 if panel is None else max(1, int(math.ceil((h - l) / panel)))
            edges = np.linspace(l, h, n + 1)
            for p, q in zip(edges[:-1], edges[1:]):
                nodes = p + (q - p) * t
                xs.append(nodes)
                ws.append((q - p) * wt * (c + s * (nodes - lo)))
        return np.concatenate(xs), np.concatenate(ws)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray], a: float = -INF, b: float = INF, order: int = 64, panel: float | None = None) -> float:
        x, w = self.quadrature(a, b, order, panel)
        if x.size == 0:
            return 0.0
        return float(np.dot(w, f(x)))

    def sample(self, a: float, b: float, rng: np.random.Generator, closed: tuple[bool, bool] = (False, False)) -> float:
        """One draw from the normalized restriction of this measure to (a, b)."""
        total = self.mass(a, b, closed)
        if not (total > 0) or math.isinf(total):
            raise MeasureError(f"cannot normalize measure on ({a}, {b}), mass {total}")
        target = rng.random() * total
        # walk atoms and pieces in order of position
        items: list[tuple[float, int, tuple]] = []
        for x, m in self.atoms:
            inside = (x > a or (closed[0] and x == a)) and (x < b or (closed[1] and x == b))
            if inside:
                items.append((x, 0, (m,)))
        for lo, hi, c, s in self.density:
            l, h = max(lo, a), min(hi, b)
            if h > l:
                items.append((l, 1, (lo, l, h, c, s)))
        items.sort(key=lambda it: (it[0], it[1]))
        last = None
        for start, kind, data in items:
            if kind == 0:
                last = start
                if target < data[0]:
                    return start
                target -= data[0]
            else:
                lo, l, h, c, s = data
                d_l = c + s * (l - lo)
                piece = (d_l + 0.5 * s * (h - l)) * (h - l)
                last = h
                if target < piece:
                    return _invert_linear(l, h, d_l, s, target)
                target -= piece
        return last  # rounding spill


def _invert_linear(l: float, h: float, d_l: float, s: float, target: float) -> float:
    # solve d_l*t + s*t^2/2 = target for t in [0, h-l]
    if abs(s) * (h - l) < 1e-12 * max(d_l, 1e-300):
        t = target / d_l
    else:
        disc = d_l * d_l + 2.0 * s * target
        t = 2.0 * target / (d_l + math.sqrt(max(disc, 0.0)))
    return min(max(l + t, l), h)


def _merge_densities(p1: Sequence, p2: Sequence, sign2: float) -> tuple:
    cuts = set()
    for lo, hi, _, _ in list(p1) + list(p2):
        cuts.add(lo)
        cuts.add(hi)
    cuts = sorted(cuts)
    out = []

    def at(pieces, x_lo, x_hi):
        for lo, hi, c, s in pieces:
            if lo <= x_lo and x_hi <= hi:
                base = c + s * (x_lo - lo) if s and math.isfinite(x_lo) else c
                return base, s
        return 0.0, 0.0

    for l, h in zip(cuts, cuts[1:]):
        c1, s1 = at(p1, l, h)
        c2, s2 = at(p2, l, h)
        c, s = c1 + sign2 * c2, s1 + sign2 * s2
        if c != 0.0 or s != 0.0:
            out.append((l, h, c, s))
    return tuple(out)


@dataclass(frozen=True)
class SignedMeasure:
    """``positive - negative`` with both parts Radon."""

    positive: RadonMeasure = RadonMeasure()
    negative: RadonMeasure = RadonMeasure()

    @classmethod
    def of(cls, atoms: Iterable[tuple[float, float]] = (), density: Iterable = ()) -> "SignedMeasure":
        """Build from signed atoms and signed constant-coefficient pieces."""
        pos_a, neg_a = [], []
        for x, m in atoms:
            (pos_a if m > 0 else neg_a).append((x, abs(m)))
        pos_d, neg_d = [], []
        for lo, hi, c, s in density:
            end = c + s * (hi - lo) if math.isfinite(hi - lo) else c
            if c >= 0 and end >= 0:
                pos_d.append((lo, hi, c, s))
            elif c <= 0 and end <= 0:
                neg_d.append((lo, hi, -c, -s))
            else:
                raise MeasureError("a signed density piece must not change sign")
        return cls(RadonMeasure(tuple(pos_a), tuple(pos_d)), RadonMeasure(tuple(neg_a), tuple(neg_d)))

    @classmethod
    def killing(cls, kappa: RadonMeasure) -> "SignedMeasure":
        return cls(RadonMeasure(), kappa)

    @property
    def is_zero(self) -> bool:
        return self.positive.is_zero and self.negative.is_zero

    def __neg__(self) -> "SignedMeasure":
        return SignedMeasure(self.negative, self.positive)

    def __add__(self, other: "SignedMeasure") -> "SignedMeasure":
        return SignedMeasure(self.positive + other.positive, self.negative + other.negative)

    def scale(self, factor: float) -> "SignedMeasure":
        if factor < 0:
            return (-self).scale(-factor)
        return SignedMeasure(self.positive.scale(factor), self.negative.scale(factor))

    def breakpoints(self) -> list[float]:
        return sorted(set(self.positive.breakpoints()) | set(self.negative.breakpoints()))

    def support_hull(self) -> tuple[float, float]:
        hulls = [m.support_hull() for m in (self.positive, self.negative) if not m.is_zero]
        if not hulls:
            return (math.nan, math.nan)
        return (min(h[0] for h in hulls), max(h[1] for h in hulls))

    def atom_mass(self, x: float) -> float:
        return self.positive.atom_mass(x) - self.negative.atom_mass(x)

    def density_at(self, x: float) -> float:
        return self.positive.density_at(x) - self.negative.density_at(x)

    def quadrature(self, a: float = -INF, b: float = INF, order: int = 64, panel: float | None = None):
        xp, wp = self.positive.quadrature(a, b, order, panel)
        xn, wn = self.negative.quadrature(a, b, order, panel)
        return np.concatenate([xp, xn]), np.concatenate([wp, -wn])

    def integrate(self, f, a: float = -INF, b: float = INF, order: int = 64, panel: float | None = None) -> float:
        return self.positive.integrate(f, a, b, order, panel) - self.negative.integrate(f, a, b, order, panel)

    def is_compact(self) -> bool:
        lo, hi = self.support_hull()
        return self.is_zero or (math.isfinite(lo) and math.isfinite(hi))
