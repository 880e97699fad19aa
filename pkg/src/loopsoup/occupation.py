"""Occupation fields of loop soups, their closed-form laws, and the free field.

The field of intensity ``alpha`` is a permanental process with kernel G. It is
sampled through the reduction ``L(x) = u_down(x)**2 * Q(s(x))`` where Q is a
squared Bessel process of dimension ``2 alpha`` started at 0 and
``s = u_up / (2 u_down)``; Q is stepped with its exact transition law.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .core.classify import GeneratorClass, classify, perturb
from .core.generator import GeneratorSpec
from .core.harmonic import HarmonicSystem, harmonic_pair
from .core.measures import RadonMeasure, SignedMeasure
from .rng import as_rng


@dataclass
class OccupationField:
    """Field values on a grid, in local-time units relative to ``m(x) dx``.

    ``values`` has shape ``(n,)`` or ``(replicas, n)``. ``zero_between[..., i]``
    records whether the field vanished somewhere strictly inside cell i.
    """

    x: np.ndarray
    values: np.ndarray
    alpha: float
    zero_between: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def rows(self, replica_id: int = 0):
        for x, v in zip(self.x.tolist(), np.atleast_2d(self.values)[0].tolist()):
            yield (x, v, replica_id)


@dataclass
class GFFSample:
    x: np.ndarray
    values: np.ndarray


def _reduced_time(hs: HarmonicSystem, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(u_down(x), u_up(x)/u_down(x)) on a sorted grid."""
    uu = hs.up.values(x)[0]
    ud = hs.down.values(x)[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ud > 0, uu / ud, np.inf)
    return ud, np.maximum.accumulate(np.maximum(ratio, 0.0))


def besq_step(q: np.ndarray, h: float | np.ndarray, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Exact transition of a squared Bessel process of dimension 2*alpha over time h."""
    n = rng.poisson(q / (2.0 * h))
    return rng.gamma(n + alpha, 2.0 * h)


def _zero_prob(q1: np.ndarray, q2: np.ndarray, h: float, alpha: float) -> np.ndarray:
    """P(the bridge of dimension 2 alpha < 2 from q1 to q2 over time h touches 0)."""
    z = np.sqrt(q1 * q2) / h
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = special.ive(1.0 - alpha, z) / special.ive(alpha - 1.0, z)
    p = 1.0 - ratio
    return np.where(z > 0, np.clip(p, 0.0, 1.0), 1.0)


def sample_field(gen: GeneratorSpec, hs: HarmonicSystem | None, alpha: float, grid: Sequence[float],
                 rng=None, size: int | None = None, track_zeros: bool = True) -> OccupationField:
    """Sample the occupation field at the grid points, exactly in law.

    With ``size`` the result holds ``size`` independent replicas.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    rng = as_rng(rng)
    hs = harmonic_pair(gen) if hs is None else hs
    x = np.asarray(grid, float)
    if x.ndim != 1 or np.any(np.diff(x) <= 0):
        raise ValueError("grid must be strictly increasing")
    if np.any(x < gen.lo) or np.any(x > gen.hi):
        raise ValueError("grid leaves the interval")
    ud, ratio = _reduced_time(hs, x)
    s = 0.5 * ratio
    reps = 1 if size is None else int(size)
    Q = np.zeros((reps, x.size))
    zeros = np.zeros((reps, max(x.size - 1, 0)), dtype=bool) if (track_zeros and alpha < 1) else None
    q = np.zeros(reps)
    t = 0.0
    for i in range(x.size):
        si = s[i]
        if not math.isfinite(si):
            q = np.zeros(reps)
        elif si > t:
            prev = q
            q = besq_step(q, si - t, alpha, rng)
            if zeros is not None and i > 0:
                zeros[:, i - 1] = rng.random(reps) < _zero_prob(prev, q, si - t, alpha)
            t = si
        Q[:, i] = q
    vals = np.where(np.isfinite(s), ud ** 2, 0.0) * Q
    if size is None:
        vals = vals[0]
        zeros = None if zeros is None else zeros[0]
    return OccupationField(x, vals, float(alpha), zeros)


def euler_field(gen: GeneratorSpec, hs: HarmonicSystem, alpha: float, grid: Sequence[float], rng=None,
                size: int = 1, substeps: int = 200) -> np.ndarray:
    """Euler scheme for the branching SDE in the space variable, started at 0 at grid[0].

    dZ = sqrt(2 w Z) dB + 2 (log u_down)' Z dx + alpha w dx. Only meant as an
    independent check of :func:`sample_field`.
    """
    rng = as_rng(rng)
    x = np.asarray(grid, float)
    Z = np.zeros(size)
    out = np.zeros((size, x.size))
    for i in range(1, x.size):
        h = (x[i] - x[i - 1]) / substeps
        for k in range(substeps):
            t = x[i - 1] + k * h
            uu, pu, ud, pd = hs.pair_state(t)
            w = hs.w_at(t)
            drift = 2.0 * w * pd / ud
            Z = Z + drift * Z * h + alpha * w * h + np.sqrt(2.0 * w * np.maximum(Z, 0.0) * h) * rng.standard_normal(size)
            Z = np.maximum(Z, 0.0)
        out[:, i] = Z
    return out


def clusters(fld: OccupationField) -> list[tuple[float, float]]:
    """Maximal intervals of positivity.

    A cluster stops at a grid zero, or at a cell in which the field is known
    to vanish; such a cell is excluded from both neighbouring clusters.
    """
    x = fld.x
    v = np.asarray(fld.values)
    if v.ndim != 1:
        raise ValueError("clusters takes a single replica")
    zb = np.zeros(max(x.size - 1, 0), bool) if fld.zero_between is None else fld.zero_between
    out = []
    start = None
    for i in range(x.size):
        if v[i] > 0:
            if start is None:
                start = x[i] if i == 0 or (v[i - 1] > 0 and zb[i - 1]) else x[i - 1]
            if i == x.size - 1 or zb[i] or v[i + 1] <= 0:
                end = x[i] if (i == x.size - 1 or zb[i]) else x[i + 1]
                out.append((float(start), float(end)))
                start = None
    return out


# closed-form laws

def _pert_atoms(gen: GeneratorSpec, points: Sequence[float], lambdas: Sequence[float]) -> SignedMeasure:
    """Killing atoms whose effect on the field is exp(-sum lambda_i L(x_i))."""
    kill = RadonMeasure.zero()
    for x, lam in zip(points, lambdas):
        if lam:
            kill = kill + RadonMeasure.dirac(float(x), float(lam) / gen.m(float(x)))
    return SignedMeasure.killing(kill)


def laplace_det(hs: HarmonicSystem, gen: GeneratorSpec, points: Sequence[float], lambdas: Sequence[float],
                alpha: float) -> float:
    """E[exp(-sum lambda_i L(x_i))] as a ratio of Green determinants to the power alpha."""
    pts = [float(p) for p in points]
    if len(set(pts)) != len(pts):
        raise ValueError("points must be distinct")
    if not any(lambdas):
        return 1.0
    hs2 = harmonic_pair(perturb(gen, _pert_atoms(gen, pts, lambdas)))
    G0 = np.array([[hs.green(a, b) for b in pts] for a in pts])
    G1 = np.array([[hs2.green(a, b) for b in pts] for a in pts])
    return float((np.linalg.det(G1) / np.linalg.det(G0)) ** alpha)


def laplace_direct(hs: HarmonicSystem, points: Sequence[float], lambdas: Sequence[float], alpha: float) -> float:
    """det(I + diag(lambda) G)^(-alpha), the same quantity without perturbing the generator."""
    pts = [float(p) for p in points]
    G = np.array([[hs.green(a, b) for b in pts] for a in pts])
    return float(np.linalg.det(np.eye(len(pts)) + np.diag(lambdas) @ G) ** (-alpha))


def _cycles(perm: tuple[int, ...]) -> int:
    seen = [False] * len(perm)
    count = 0
    for i in range(len(perm)):
        if not seen[i]:
            count += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
    return count


def permanental_moment(hs: HarmonicSystem, points: Sequence[float], alpha: float) -> float:
    """E[prod L(x_i)]: the alpha-permanent of the Green matrix."""
    pts = [float(p) for p in points]
    n = len(pts)
    if n > 10:
        raise ValueError("at most 10 points")
    G = [[hs.green(a, b) for b in pts] for a in pts]
    total = 0.0
    for perm in itertools.permutations(range(n)):
        prod = 1.0
        for i in range(n):
            prod *= G[i][perm[i]]
        total += alpha ** _cycles(perm) * prod
    return total


def _nodes(gen: GeneratorSpec, nu: SignedMeasure, order: int = 64, panel: float = 0.5):
    x, w = nu.quadrature(order=order, panel=panel)
    return x, w * np.array([gen.m(t) for t in x])


@dataclass
class ExpMoment:
    value: float
    trace: float
    fredholm: float
    fredholm_direct: float
    kind: GeneratorClass
    margin: float


def exp_moment_routes(gen: GeneratorSpec, hs: HarmonicSystem, nu_tilde: SignedMeasure, alpha: float,
                      order: int = 64) -> ExpMoment:
    """E[exp(integral of L against m nu_tilde)] by the trace formula and by a Fredholm determinant."""
    if not nu_tilde.is_compact():
        raise ValueError("nu_tilde must be compactly supported")
    if nu_tilde.is_zero:
        return ExpMoment(1.0, 1.0, 1.0, 1.0, GeneratorClass.D_MINUS, 1.0)
    cls = classify(gen.without_potential(), gen.potential + nu_tilde)
    if cls.kind is not GeneratorClass.D_MINUS:
        return ExpMoment(math.inf, math.inf, math.inf, math.inf, cls.kind, cls.margin)
    x, wts = _nodes(gen, nu_tilde, order)

    def trace_at(s: float) -> float:
        h = hs if s == 0 else harmonic_pair(gen.add_potential(nu_tilde.scale(s)))
        return float(np.dot(wts, h.green_diag(x)))

    val, _ = integrate.quad(trace_at, 0.0, 1.0, epsabs=1e-12, epsrel=1e-11, limit=200)
    trace = math.exp(alpha * val)
    hs1 = harmonic_pair(gen.add_potential(nu_tilde))
    Gt = hs1.green(x[:, None], x[None, :])
    G0 = hs.green(x[:, None], x[None, :])
    n = x.size
    sign1, log1 = np.linalg.slogdet(np.eye(n) + Gt * wts[None, :])
    sign0, log0 = np.linalg.slogdet(np.eye(n) - G0 * wts[None, :])
    fred = math.exp(alpha * log1) if sign1 > 0 else math.nan
    direct = math.exp(-alpha * log0) if sign0 > 0 else math.inf
    return ExpMoment(trace, trace, fred, direct, cls.kind, cls.margin)


def exp_moment(gen: GeneratorSpec, hs: HarmonicSystem, nu_tilde: SignedMeasure, alpha: float) -> float:
    """Exponential moment of the field against ``nu_tilde``; ``math.inf`` when it diverges."""
    return exp_moment_routes(gen, hs, nu_tilde, alpha).value


def sample_gff(gen: GeneratorSpec, hs: HarmonicSystem | None, grid: Sequence[float], rng=None,
               size: int | None = None) -> GFFSample:
    """Centered Gaussian field with covariance G: u_down times a Brownian path run on u_up/u_down."""
    rng = as_rng(rng)
    hs = harmonic_pair(gen) if hs is None else hs
    x = np.asarray(grid, float)
    ud, ratio = _reduced_time(hs, x)
    reps = 1 if size is None else int(size)
    fin = np.isfinite(ratio)
    dt = np.diff(np.concatenate([[0.0], np.where(fin, ratio, 0.0)]))
    dt = np.maximum(dt, 0.0)
    W = np.cumsum(rng.standard_normal((reps, x.size)) * np.sqrt(dt), axis=1)
    vals = np.where(fin, ud, 0.0) * W
    return GFFSample(x, vals[0] if size is None else vals)
