"""Interleaved root / cut-point configurations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InterleavingError(ValueError):
    pass


@dataclass
class PointConfig:
    """Roots ``Y`` and cut points ``Z`` (sorted), plus Wilson segments if any.

    Between two consecutive roots there is exactly one cut point and the
    extreme points are roots.
    """

    Y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    Z: np.ndarray = field(default_factory=lambda: np.zeros(0))
    segments: list[tuple[float, float]] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.Y = np.sort(np.asarray(self.Y, dtype=float))
        self.Z = np.sort(np.asarray(self.Z, dtype=float))

    def copy(self) -> "PointConfig":
        return PointConfig(self.Y.copy(), self.Z.copy(), list(self.segments), dict(self.info))

    @property
    def n_roots(self) -> int:
        return int(self.Y.size)

    def is_interleaved(self) -> bool:
        if self.Y.size == 0:
            return self.Z.size == 0
        if self.Z.size != self.Y.size - 1:
            return False
        if self.Z.size == 0:
            return True
        return bool(np.all(self.Y[:-1] < self.Z) and np.all(self.Z < self.Y[1:]))

    def check(self) -> "PointConfig":
        if not self.is_interleaved():
            raise InterleavingError(f"roots and cut points not interleaved: Y={self.Y}, Z={self.Z}")
        return self

    def merged(self) -> np.ndarray:
        return np.sort(np.concatenate([self.Y, self.Z]))

    def window(self, a: float, b: float) -> "PointConfig":
        """Points inside [a, b] (interleaving is not guaranteed for the cut)."""
        return PointConfig(self.Y[(self.Y >= a) & (self.Y <= b)], self.Z[(self.Z >= a) & (self.Z <= b)],
                           info=dict(self.info))

    def rows(self, replica_id: int = 0, seed: int = 0):
        for y in self.Y:
            yield ("Y", float(y), replica_id, seed)
        for z in self.Z:
            yield ("Z", float(z), replica_id, seed)
