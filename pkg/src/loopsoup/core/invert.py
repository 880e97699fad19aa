"""Inverting nondecreasing functions built from the harmonic pair.

The functions handled here are combinations of the tabulated solutions, so
they are known exactly at grid nodes (with jumps at atoms) and can be
evaluated exactly anywhere else. Inversion brackets the root among nodes,
then runs a safeguarded Newton iteration inside one cell.
"""

from __future__ import annotations

import bisect
import math
from typing import Callable

import numpy as np

from .harmonic import HarmonicSystem

NodeFn = Callable[[int, int, str], np.ndarray]
PointFn = Callable[[float, str], float]
SlopeFn = Callable[[float], float]


def invert_nondecreasing(hs: HarmonicSystem, lo: float, hi: float, target: float,
                         nodes: NodeFn, value: PointFn, slope: SlopeFn) -> float:
    """Smallest t in (lo, hi] with F(t+) >= target.

    ``nodes(i, j, side)`` returns F at grid nodes i..j-1 from the given side,
    ``value(t, side)`` evaluates F anywhere and ``slope(t)`` is dF/dt away from
    atoms. ``lo`` may be -inf and ``hi`` +inf.
    """
    xl = hs.grid.xl
    i0 = bisect.bisect_right(xl, lo)
    i1 = bisect.bisect_left(xl, hi)
    a, b = lo, hi
    if i1 > i0:
        right = nodes(i0, i1, "right")
        k = int(np.searchsorted(right, target, side="left"))
        if k < right.size:
            node = i0 + k
            if value(xl[node], "left") < target:
                return xl[node]
            b = xl[node]
            if k > 0:
                a = xl[node - 1]
        else:
            a = xl[i1 - 1]
    if math.isfinite(b) and value(b, "left") < target:
        return b
    if math.isinf(a):
        step = 1.0
        a = (b if math.isfinite(b) else (xl[0] if xl else 0.0)) - step
        while value(a, "right") >= target:
            step *= 2.0
            a -= step
    if math.isinf(b):
        step = 1.0
        b = (a if math.isfinite(a) else 0.0) + step
        while value(b, "left") < target:
            step *= 2.0
            b += step
    return _safe_newton(a, b, target, value, slope)


def _safe_newton(a: float, b: float, target: float, value: PointFn, slope: SlopeFn) -> float:
    fa = value(a, "right") - target
    if fa >= 0:
        return a
    fb = value(b, "left") - target
    # secant start: exact when F is linear on the bracket
    t = a + (b - a) * (-fa / (fb - fa)) if fb > fa else 0.5 * (a + b)
    if not a < t < b:
        t = 0.5 * (a + b)
    scale = 1.0 + abs(a) + abs(b)
    for _ in range(200):
        f = value(t, "right") - target
        if f == 0:
            return t
        if f > 0:
            b = t
        else:
            a = t
        if b - a <= 4e-16 * scale:
            return b
        d = slope(t)
        step_ok = False
        if d > 0 and math.isfinite(d):
            step = f / d
            if abs(step) <= 1e-15 * scale:
                return t
            tn = t - step
            if a < tn < b:
                t = tn
                step_ok = True
        if not step_ok:
            t = 0.5 * (a + b)
    return t
