"""Generators (1/m) d/dx((1/w) d/dx) + creation - kappa on an interval."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

from .measures import INF, MeasureError, PiecewiseConstant, RadonMeasure, SignedMeasure

KILLING = "killing"
NATURAL = "natural"
_BOUNDARY_ALIASES = {"killing": KILLING, "killed": KILLING, "natural": NATURAL, "reflecting": NATURAL}


class ConfigError(ValueError):
    """Invalid generator or run configuration."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Interval, speed density ``m``, scale density ``w`` and the potential.

    ``kappa`` is the killing measure. ``creation`` holds mass creation and is
    only ever nonzero for perturbed generators; the ODE sees the signed
    measure ``creation - kappa``. A ``natural`` flag on a finite end means the
    diffusion is reflected there.
    """

    interval: tuple[float, float] = (-INF, INF)
    boundary: tuple[str, str] = (NATURAL, NATURAL)
    m: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(1.0))
    w: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(2.0))
    kappa: RadonMeasure = field(default_factory=RadonMeasure)
    creation: RadonMeasure = field(default_factory=RadonMeasure)

    def __post_init__(self):
        lo, hi = (float(v) for v in self.interval)
        if not lo < hi:
            raise ConfigError(f"empty interval ({lo}, {hi})")
        bnd = tuple(_BOUNDARY_ALIASES.get(b, b) for b in self.boundary)
        for b in bnd:
            if b not in (KILLING, NATURAL):
                raise ConfigError(f"unknown boundary flag {b!r}")
        if math.isinf(lo) and bnd[0] == KILLING or math.isinf(hi) and bnd[1] == KILLING:
            raise ConfigError("a killing boundary must be finite")
        object.__setattr__(self, "interval", (lo, hi))
        object.__setattr__(self, "boundary", bnd)
        for meas in (self.kappa, self.creation):
            if meas.is_zero:
                continue
            a, b = meas.support_hull()
            if a < lo or b > hi:
                raise ConfigError("measure must be supported inside the interval")

    @classmethod
    def brownian(cls, kappa: RadonMeasure | None = None, lo: float = -INF, hi: float = INF,
                 boundary: tuple[str, str] | None = None) -> "GeneratorSpec":
        """Standard Brownian motion (m=1, w=2); finite ends default to killing."""
        if boundary is None:
            boundary = (KILLING if math.isfinite(lo) else NATURAL, KILLING if math.isfinite(hi) else NATURAL)
        return cls((lo, hi), boundary, kappa=kappa or RadonMeasure())

    @property
    def lo(self) -> float:
        return self.interval[0]

    @property
    def hi(self) -> float:
        return self.interval[1]

    @property
    def potential(self) -> SignedMeasure:
        return SignedMeasure(self.creation, self.kappa)

    def with_kappa(self, kappa: RadonMeasure) -> "GeneratorSpec":
        return replace(self, kappa=kappa)

    def without_potential(self) -> "GeneratorSpec":
        return replace(self, kappa=RadonMeasure(), creation=RadonMeasure())

    def add_potential(self, nu: SignedMeasure) -> "GeneratorSpec":
        """Add mass creation ``nu.positive`` and killing ``nu.negative``."""
        return replace(self, kappa=self.kappa + nu.negative, creation=self.creation + nu.positive)

    def scale_function(self, a: float, b: float) -> float:
        return self.w.integral(a, b)

    def contains(self, x: float) -> bool:
        lo, hi = self.interval
        return lo <= x <= hi

    # config documents

    @classmethod
    def from_config(cls, doc: dict[str, Any]) -> "GeneratorSpec":
        try:
            lo, hi = (_parse_real(v) for v in doc.get("interval", ["-inf", "+inf"]))
            bnd = doc.get("boundary")
            if bnd is None:
                bnd = (KILLING if math.isfinite(lo) else NATURAL, KILLING if math.isfinite(hi) else NATURAL)
            m = _parse_piecewise(doc.get("m", 1.0), "m")
            w = _parse_piecewise(doc.get("w", 2.0), "w")
            kap = doc.get("kappa", {}) or {}
            kappa = RadonMeasure(
                atoms=tuple((float(x), float(c)) for x, c in kap.get("atoms", [])),
                density=tuple(tuple(_parse_real(v) for v in p) for p in kap.get("density", [])),
            )
            return cls((lo, hi), tuple(bnd), m=m, w=w, kappa=kappa)
        except (MeasureError, TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"generator config: {exc}") from exc

    def to_config(self) -> dict[str, Any]:
        def real(v):
            return "+inf" if v == INF else "-inf" if v == -INF else v

        return {
            "interval": [real(self.lo), real(self.hi)],
            "boundary": ["killed" if b == KILLING else "natural" for b in self.boundary],
            "m": {"breaks": list(self.m.breaks), "values": list(self.m.values)},
            "w": {"breaks": list(self.w.breaks), "values": list(self.w.values)},
            "kappa": {
                "atoms": [list(a) for a in self.kappa.atoms],
                "density": [[real(v) for v in p] for p in self.kappa.density],
            },
        }


def _parse_real(v: Any) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        if s in ("-inf", "-infinity"):
            return -INF
    return float(v)


def _parse_piecewise(v: Any, name: str) -> PiecewiseConstant:
    if isinstance(v, (int, float)):
        return PiecewiseConstant.constant(float(v))
    if isinstance(v, dict):
        return PiecewiseConstant(tuple(float(b) for b in v.get("breaks", [])), tuple(float(x) for x in v["values"]))
    raise ConfigError(f"field {name!r}: expected a number or {{breaks, values}}")
