"""Poisson point streams with Gumbel-type intensity lambda * exp(-x) dx.

The points, sorted decreasingly, are X_k = log(1 / S_k) where S_k is the
k-th partial sum of iid exponential(lambda) waiting times.  Streams are
lazy and unbounded; every consumer applies its own stopping rule.

Exponentials are drawn by inverse CDF, -log(1 - U) / lambda, so each point
costs exactly one uniform (plus one draw for its mark, if marked).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyMarkSpace


@dataclass
class MarkedPoint:
    value: float
    mark: float


class GumbelPointStream:
    """Strictly decreasing points of a Poisson process with intensity
    lambda * exp(-x) dx, generated lazily from an owned generator.

    The stream is single-consumer: it owns its generator and advances it by
    exactly one exponential draw per point.
    """

    def __init__(self, intensity: float, gen: np.random.Generator):
        if not intensity > 0.0:
            raise ConfigError(f"intensity must be > 0, got {intensity}")
        self.intensity = float(intensity)
        self.gen = gen
        self.total = 0.0   # running sum S_k of exponential waiting times
        self.count = 0     # number of points emitted

    def next_point(self) -> float:
        u = self.gen.random()
        self.total += -math.log1p(-u) / self.intensity
        self.count += 1
        return -math.log(self.total)

    def __iter__(self):
        while True:
            yield self.next_point()


class MarkedGumbelStream:
    """Gumbel point stream with iid uniform marks, independent of the points.

    ``mark_space`` is either an (lo, hi) interval with hi > lo, or a
    one-dimensional array of lattice sites.
    """

    def __init__(self, intensity: float, mark_space, gen: np.random.Generator):
        self.stream = GumbelPointStream(intensity, gen)
        self.gen = gen
        if isinstance(mark_space, tuple):
            lo, hi = mark_space
            if not hi > lo:
                raise EmptyMarkSpace(f"interval ({lo}, {hi}) has no length")
            self._lo, self._width = float(lo), float(hi - lo)
            self._sites = None
        else:
            sites = np.asarray(mark_space, dtype=float)
            if sites.size == 0:
                raise EmptyMarkSpace("empty mark site set")
            self._sites = sites

    @property
    def count(self) -> int:
        return self.stream.count

    def next_marked_point(self) -> MarkedPoint:
        x = self.stream.next_point()
        if self._sites is None:
            mark = self._lo + self._width * self.gen.random()
        else:
            mark = float(self._sites[self.gen.integers(self._sites.size)])
        return MarkedPoint(x, mark)


def next_point(stream: GumbelPointStream) -> float:
    return stream.next_point()


def next_marked_point(stream: MarkedGumbelStream) -> MarkedPoint:
    return stream.next_marked_point()
