"""Pinned Gaussian paths with the standard max-stable drift.

The building block of every generator is the drifted field

    xi(t) = W(t) - sigma^2(t) / 2,

where W is a centered, intrinsically stationary Gaussian field pinned at
W(0) = 0 with variogram gamma, so that sigma^2(t) = 2 * gamma(t) and
E exp(xi(t)) = 1 at every t.  On a finite point set {t_1, ..., t_n} the
covariance of W is

    C_ij = gamma(t_i) + gamma(t_j) - gamma(t_i - t_j),

which is evaluated densely and factorized by Cholesky.  Grids are small
(a few thousand points at most), so the O(n^3) factorization is done once
and reused for every path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonPositiveDefinite

# Diagonal jitter ladder tried when the plain factorization fails.  The
# exponent alpha near 2 makes C nearly singular; anything that 1e-8 cannot
# repair is reported as NonPositiveDefinite.
_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)

_ZERO_TOL = 1e-9


@dataclass(frozen=True)
class VariogramModel:
    """Fractional variogram gamma(h) = scale * |h|**alpha, 0 < alpha <= 2."""

    alpha: float
    scale: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ConfigError(f"alpha must be in (0, 2], got {self.alpha}")
        if not self.scale > 0.0:
            raise ConfigError(f"scale must be > 0, got {self.scale}")

    def gamma(self, h):
        return self.scale * np.abs(h) ** self.alpha

    def sigma2(self, t):
        """Variance of the pinned field W at t; exactly 2 * gamma(t)."""
        return 2.0 * self.gamma(t)


@dataclass(frozen=True)
class Grid:
    """Symmetric lattice (step * Z) intersected with [-half_width, half_width]."""

    half_width: float
    step: float
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b, p = self.half_width, self.step
        if not p > 0.0:
            raise ConfigError(f"grid step must be > 0, got {p}")
        if not b > 0.0:
            raise ConfigError(f"grid half width must be > 0, got {b}")
        m = round(b / p)
        if m < 1 or abs(m * p - b) > _ZERO_TOL * max(1.0, b):
            raise ConfigError(
                f"half width {b} is not an integer multiple of step {p}"
            )
        pts = np.arange(-m, m + 1, dtype=np.int64) * p
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def zero_index(self) -> int:
        return self.size // 2

    def index_of(self, t: float) -> int:
        """Index of grid point t, or raise if t is off the grid."""
        from .errors import UnknownGridPoint

        i = round(t / self.step) + self.zero_index
        if 0 <= i < self.size and abs(self.points[i] - t) <= _ZERO_TOL * max(1.0, abs(t)):
            return i
        raise UnknownGridPoint(f"{t} is not a grid point")


def pinned_covariance(model: VariogramModel, points: np.ndarray) -> np.ndarray:
    """Covariance matrix of the pinned field W on the given points."""
    t = np.asarray(points, dtype=float)
    g = model.gamma(t)
    return g[:, None] + g[None, :] - model.gamma(t[:, None] - t[None, :])


def _cholesky_with_jitter(c: np.ndarray) -> np.ndarray:
    for jitter in _JITTERS:
        try:
            return np.linalg.cholesky(c + jitter * np.eye(c.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NonPositiveDefinite(
        "covariance not positive definite even with diagonal jitter 1e-8; "
        "the alpha/scale/grid combination is outside numerical range"
    )


class PathSampler:
    """Sampler for the drifted field xi on an arbitrary finite point set.

    Points equal to zero (the pin location) are excluded from the
    factorization and reinserted as exact zeros, so xi(0) == 0.0 bit-exactly.
    One path consumes a single standard_normal(n_free) call on its generator.
    """

    def __init__(self, model: VariogramModel, points: np.ndarray):
        self.model = model
        self.points = np.asarray(points, dtype=float)
        scale_tol = _ZERO_TOL * max(1.0, float(np.abs(self.points).max(initial=1.0)))
        self.zero_mask = np.abs(self.points) <= scale_tol
        self.free = ~self.zero_mask
        self.n_free = int(self.free.sum())
        free_pts = self.points[self.free]
        self.cholesky = _cholesky_with_jitter(pinned_covariance(model, free_pts))
        self.drift = -model.gamma(free_pts)  # -sigma^2/2 on the free points

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        z = gen.standard_normal(self.n_free)
        out = np.zeros(self.points.size)
        out[self.free] = self.cholesky @ z + self.drift
        return out

    def sample_batch(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """(n, len(points)) matrix of independent paths from one generator."""
        z = gen.standard_normal((self.n_free, n))
        out = np.zeros((n, self.points.size))
        out[:, self.free] = (self.cholesky @ z).T + self.drift
        return out

    def sample_from_normals(self, z: np.ndarray) -> np.ndarray:
        """Paths from externally supplied normals, one column per path."""
        out = np.zeros((z.shape[1], self.points.size))
        out[:, self.free] = (self.cholesky @ z).T + self.drift
        return out


class CovarianceFactor:
    """Cholesky factor of the pinned covariance over a grid's nonzero points."""

    def __init__(self, model: VariogramModel, grid: Grid):
        self.model = model
        self.grid = grid
        self._sampler = PathSampler(model, grid.points)

    @property
    def cholesky(self) -> np.ndarray:
        return self._sampler.cholesky

    @property
    def nonzero_points(self) -> np.ndarray:
        return self.grid.points[self._sampler.free]

    def covariance(self) -> np.ndarray:
        """Reconstructed covariance L @ L.T over the nonzero grid points."""
        return self.cholesky @ self.cholesky.T

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        return self._sampler.sample(gen)

    def sample_batch(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self._sampler.sample_batch(gen, n)


def build_covariance(model: VariogramModel, grid: Grid) -> CovarianceFactor:
    """Factorize the pinned covariance of W over the grid's nonzero points."""
    return CovarianceFactor(model, grid)


def sample_drifted_path(factor: CovarianceFactor, gen: np.random.Generator) -> np.ndarray:
    """One realization of xi = W - sigma^2/2 on all grid points, xi(0) = 0."""
    return factor.sample(gen)
