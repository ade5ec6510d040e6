"""The five distributionally equivalent Brown-Resnick generators.

Every generator builds Z(t) = max_i (X_i + xi_i(t - shift_i)) on the grid
from a decreasing Gumbel point stream and iid drifted Gaussian paths:

  * method 0 - the canonical construction, paths centered at 0;
  * method 1 - n independent streams of intensity 1/n at fixed shifts h_j;
  * method 2 - one stream with uniform random translations on [-v, v];
  * method 3 - one unit-intensity stream per lattice block j, keeping only
    paths whose lattice argmax falls in (-p/2, p/2], translated by p*j;
  * method 4 - moving maxima: pre-conditioned shapes from the shape
    measure, placed at uniform lattice sites in [-v, v] with levels from a
    stream of total intensity lambda_p * p * n_sites.

Path budgets are either fixed (k_max paths) or adaptive.  Methods 3 and 4
have an exact stopping rule: a kept path can never exceed its own level
anywhere, so work stops once the next level falls below the running field
minimum.  Methods 0-2 are unbounded above and use a heuristic: stop when
the next level plus a high quantile of max_t xi(t) (estimated once per
model/window from pilot paths) falls below the running minimum.

Substream layout: ids are (method, replication, block, 0, purpose), one
point stream and one path stream per block, each consumed append-only.
Isolated, append-only block substreams make early stopping and block
truncation bit-reproducible (extra paths never perturb earlier draws)
while still allowing batched path generation.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyMarkSpace, InvalidLattice, InvalidWindow
from .gauss import Grid, PathSampler, VariogramModel, build_covariance
from .ppp import GumbelPointStream
from .rng import GAUSS, MARKS, PILOT, POINTS, SHAPE, RandomStream
from .shape import (
    PooledShapeSource,
    RejectionShapeSource,
    ShapeSource,
    default_window,
    estimate_lambda_p,
    lattice_sampler,
    window_steps,
)

GUMBEL = "gumbel"
FRECHET = "frechet"

_PILOT_PATHS = 10_000
_PILOT_QUANTILE = 1.0 - 1e-4
_LAMBDA_SAMPLES = 100_000

_qhi_cache: dict = {}
_lambda_cache: dict = {}
_cache_lock = threading.Lock()


@dataclass(frozen=True)
class MethodConfig:
    """Parameters of one generator run.

    ``v`` is the translation half-width for method 2 and the site-window
    half-width for method 4; ``j_max`` fixes the method-3 block range
    [-j_max, j_max] (j_min = -j_max always).  ``shape_mode`` selects how
    method 4 draws shapes: "fresh" rejection per draw, or "pooled" from a
    pre-sampled pool of ``pool_size`` shapes.
    """

    method: int
    k_max: int = 4000
    adaptive: bool = True
    margins: str = GUMBEL
    shifts: tuple = (0.0,)
    v: float = 4.0
    snap_marks: bool = False
    j_max: int = 70
    m: int = 1
    lambda_p: float | None = None
    shape_mode: str = "fresh"
    pool_size: int = 16384
    shape_window: float | None = None
    lambda_samples: int = _LAMBDA_SAMPLES

    @property
    def j_min(self) -> int:
        return -self.j_max

    def __post_init__(self):
        if self.method not in (0, 1, 2, 3, 4):
            raise ConfigError(f"method must be in 0..4, got {self.method}")
        if self.k_max < 1:
            raise ConfigError(f"k_max must be >= 1, got {self.k_max}")
        if self.margins not in (GUMBEL, FRECHET):
            raise ConfigError(f"margins must be gumbel or frechet, got {self.margins}")
        if self.method == 1 and len(self.shifts) < 1:
            raise ConfigError("method 1 needs at least one shift")
        if self.method == 2 and not self.v > 0:
            raise ConfigError(f"method 2 needs v > 0, got {self.v}")
        if self.method == 3:
            if self.m != 1:
                raise InvalidLattice(f"method 3 requires m = 1, got {self.m}")
            if self.j_max < 1:
                raise InvalidLattice(f"method 3 needs j_max >= 1, got {self.j_max}")
        if self.method == 4:
            if self.shape_mode not in ("fresh", "pooled"):
                raise ConfigError(f"unknown shape_mode {self.shape_mode!r}")
            if self.lambda_p is not None and not self.lambda_p > 0:
                raise ConfigError(f"lambda_p must be > 0, got {self.lambda_p}")


@dataclass(frozen=True)
class FieldRealization:
    """One approximate realization of the field on the grid."""

    grid: Grid
    values: np.ndarray
    paths_used: int
    stop_reason: str  # "fixed_k" or "adaptive"
    margins: str = GUMBEL

    def value_at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])


def _finalize(grid: Grid, values: np.ndarray, paths: int, stop: str, config: MethodConfig):
    if config.margins == FRECHET:
        values = np.exp(values)
    values.flags.writeable = False
    return FieldRealization(
        grid=grid, values=values, paths_used=paths, stop_reason=stop, margins=config.margins
    )


def _pilot_quantile(
    model: VariogramModel, step: float, steps: int, stream: RandomStream
) -> float:
    """High quantile of max_t xi(t) over the window lattice, from pilot paths."""
    key = (stream.seed, stream.prefix, model.alpha, model.scale, step, steps)
    with _cache_lock:
        q = _qhi_cache.get(key)
    if q is None:
        sampler = lattice_sampler(model, step, steps)
        gen = stream.substream(9, 0, 0, 0, PILOT)
        tops = np.empty(_PILOT_PATHS)
        done = 0
        while done < _PILOT_PATHS:
            m = min(2048, _PILOT_PATHS - done)
            tops[done : done + m] = sampler.sample_batch(gen, m).max(axis=1)
            done += m
        q = float(np.quantile(tops, _PILOT_QUANTILE))
        with _cache_lock:
            _qhi_cache.setdefault(key, q)
    return q


def _hull_steps(grid: Grid, extra: float) -> int:
    return grid.zero_index + math.ceil(extra / grid.step - 1e-12)


# ---------------------------------------------------------------------------
# method 0

def method0(
    model: VariogramModel,
    grid: Grid,
    config: MethodConfig,
    stream: RandomStream,
    rep: int = 0,
) -> FieldRealization:
    """Canonical generator: Z(t) = max_{i<=k} (X_i + xi_i(t))."""
    factor = build_covariance(model, grid)
    if not config.adaptive:
        return _method0_bulk(grid, config, stream, rep, factor)
    q_hi = _pilot_quantile(model, grid.step, grid.zero_index, stream)
    return _run_shifted(
        grid, config, stream, rep, factors=[(0.0, factor)], q_hi=q_hi, method_id=0
    )


_BULK_CHUNK = 512


def _method0_bulk(grid, config, stream, rep, factor) -> FieldRealization:
    """Fixed-budget method 0 with chunked, batched path generation.

    Points and paths come from the same two substreams as the incremental
    driver; chunk boundaries are fixed, so runs with different k agree
    bit-for-bit on their common prefix of paths.
    """
    gen_pts = stream.substream(0, rep, 0, 0, POINTS)
    gen_paths = stream.substream(0, rep, 0, 0, GAUSS)
    sampler = factor._sampler
    z = np.full(grid.size, -np.inf)
    total = 0.0
    done = 0
    while done < config.k_max:
        m = min(_BULK_CHUNK, config.k_max - done)
        u = gen_pts.random(m)
        s = total + np.cumsum(-np.log1p(-u))
        total = float(s[-1])
        x = -np.log(s)
        normals = gen_paths.standard_normal((m, sampler.n_free))
        paths = sampler.sample_from_normals(normals.T)
        np.maximum(z, (x[:, None] + paths).max(axis=0), out=z)
        done += m
    return _finalize(grid, z, done, "fixed_k", config)


# ---------------------------------------------------------------------------
# methods 1 and 2 share the shifted-evaluation core

def _run_shifted(grid, config, stream, rep, factors, q_hi, method_id):
    """Round-robin driver for methods 0 and 1 (fixed shifts, n streams)."""
    n = len(factors)
    z = np.full(grid.size, -np.inf)
    streams = []
    for j in range(n):
        gen_pts = stream.substream(method_id, rep, j, 0, POINTS)
        streams.append(GumbelPointStream(1.0 / n, gen_pts))
    path_gens = [stream.substream(method_id, rep, j, 0, GAUSS) for j in range(n)]
    pending = [s.next_point() for s in streams]
    alive = [True] * n
    used = 0
    count = [0] * n
    while any(alive):
        c_now = float(z.min())
        for j in range(n):
            if not alive[j]:
                continue
            if config.adaptive and used >= 1 and pending[j] + q_hi < c_now:
                alive[j] = False
                continue
            xi = factors[j][1].sample(path_gens[j])
            np.maximum(z, pending[j] + xi, out=z)
            used += 1
            count[j] += 1
            if count[j] >= config.k_max:
                alive[j] = False
            else:
                pending[j] = streams[j].next_point()
    stop = "fixed_k" if any(c >= config.k_max for c in count) or not config.adaptive else "adaptive"
    return _finalize(grid, z, used, stop, config)


def method1(
    model: VariogramModel,
    grid: Grid,
    config: MethodConfig,
    stream: RandomStream,
    rep: int = 0,
) -> FieldRealization:
    """n shifted streams of intensity 1/n: Z(t) = max_j max_i (X_i^j + xi_i^j(t - h_j))."""
    factors = [(h, PathSampler(model, grid.points - h)) for h in config.shifts]
    q_hi = None
    if config.adaptive:
        extra = max(abs(h) for h in config.shifts)
        q_hi = _pilot_quantile(model, grid.step, _hull_steps(grid, extra), stream)
    return _run_shifted(
        grid, config, stream, rep, factors=factors, q_hi=q_hi, method_id=1
    )


def method2(
    model: VariogramModel,
    grid: Grid,
    config: MethodConfig,
    stream: RandomStream,
    rep: int = 0,
) -> FieldRealization:
    """Uniform random translations on [-v, v]: Z(t) = max_i (X_i + xi_i(t - H_i))."""
    if not config.v > 0:
        raise EmptyMarkSpace(f"translation interval [-v, v] needs v > 0, got {config.v}")
    points_stream = GumbelPointStream(1.0, stream.substream(2, rep, 0, 0, POINTS))
    gen_marks = stream.substream(2, rep, 0, 0, MARKS)
    gen_paths = stream.substream(2, rep, 0, 0, GAUSS)
    q_hi = None
    if config.adaptive:
        # paths are watched on grid - H, so the stop quantile is taken over
        # the hull [-b - v, b + v] of all evaluation windows
        q_hi = _pilot_quantile(model, grid.step, _hull_steps(grid, config.v), stream)
    z = np.full(grid.size, -np.inf)
    used = 0
    stop = "fixed_k"
    while used < config.k_max:
        x = points_stream.next_point()
        if config.adaptive and used >= 1 and x + q_hi < z.min():
            stop = "adaptive"
            break
        h = -config.v + 2.0 * config.v * gen_marks.random()
        if config.snap_marks:
            h = round(h / grid.step) * grid.step
        sampler = PathSampler(model, grid.points - h)
        np.maximum(z, x + sampler.sample(gen_paths), out=z)
        used += 1
    return _finalize(grid, z, used, stop, config)


# ---------------------------------------------------------------------------
# method 3

def method3(
    model: VariogramModel,
    grid: Grid,
    config: MethodConfig,
    stream: RandomStream,
    rep: int = 0,
    early_stop: bool | None = None,
) -> FieldRealization:
    """Block decomposition with argmax filtering on the lattice.

    Each block j in [-j_max, j_max] owns a unit-intensity point stream and
    paths simulated on the shared window [-b - p*j_max, b + p*j_max]; a
    path counts only if its window argmax is the origin, and then enters
    the field translated by p*j.  A kept path never exceeds its own level,
    so block j is aborted for good once its next level drops below the
    running field minimum; block substreams are isolated and consumed
    append-only, so this is bit-identical to running every block to k_max.
    """
    if config.m != 1:
        raise InvalidLattice(f"method 3 requires m = 1, got {config.m}")
    if early_stop is None:
        early_stop = config.adaptive
    p = grid.step
    nb = grid.zero_index
    j_max = config.j_max
    if j_max < nb:
        raise InvalidLattice(
            f"need j_max >= b / p = {nb} so the blocks cover the grid, got {j_max}"
        )
    window = nb + j_max
    sampler = lattice_sampler(model, p, window)
    blocks = list(range(-j_max, j_max + 1))
    streams = {
        j: GumbelPointStream(1.0, stream.substream(3, rep, j, 0, POINTS)) for j in blocks
    }
    path_gens = {j: stream.substream(3, rep, j, 0, GAUSS) for j in blocks}
    pending = {j: streams[j].next_point() for j in blocks}
    alive = {j: True for j in blocks}
    z = np.full(grid.size, -np.inf)
    used = 0
    hit_cap = False
    path_index = 1
    while any(alive.values()) and path_index <= config.k_max:
        c_now = float(z.min())
        active = []
        for j in blocks:
            if not alive[j]:
                continue
            if early_stop and pending[j] < c_now:
                alive[j] = False
                continue
            active.append(j)
        if not active:
            break
        normals = np.empty((sampler.n_free, len(active)))
        for col, j in enumerate(active):
            normals[:, col] = path_gens[j].standard_normal(sampler.n_free)
        paths = sampler.sample_from_normals(normals)
        used += len(active)
        argmax = np.argmax(paths, axis=1)
        for col, j in enumerate(active):
            if argmax[col] == window:  # lattice argmax in (-p/2, p/2], i.e. at 0
                lo = window - j - nb
                np.maximum(z, pending[j] + paths[col, lo : lo + grid.size], out=z)
            if path_index >= config.k_max:
                alive[j] = False
                hit_cap = True
            else:
                pending[j] = streams[j].next_point()
        path_index += 1
    stop = "fixed_k" if hit_cap or not early_stop else "adaptive"
    return _finalize(grid, z, used, stop, config)


# ---------------------------------------------------------------------------
# method 4

def _method4_lambda(model, grid, config, stream, w: float) -> float:
    if config.lambda_p is not None:
        return config.lambda_p
    key = (stream.seed, stream.prefix, model.alpha, model.scale, grid.step, w, config.lambda_samples)
    with _cache_lock:
        lam = _lambda_cache.get(key)
    if lam is None:
        gen = stream.substream(4, 0, 0, 0, PILOT)
        est = estimate_lambda_p(model, grid.step, w, config.lambda_samples, gen)
        lam = est.lambda_p
        with _cache_lock:
            _lambda_cache.setdefault(key, lam)
    return lam


def resolve_shape_window(model: VariogramModel, grid: Grid, config: MethodConfig) -> float:
    """Shape window half-width covering every evaluation offset t - S."""
    b = grid.half_width
    w = config.shape_window
    if w is None:
        w = max(default_window(model, b), b + config.v)
    w_snapped = math.ceil(w / grid.step - 1e-9) * grid.step
    if w_snapped < b + config.v - 1e-9:
        raise InvalidWindow(
            f"shape window {w_snapped} cannot cover offsets up to b + v = {b + config.v}"
        )
    return w_snapped


def make_shape_source(
    model: VariogramModel,
    grid: Grid,
    config: MethodConfig,
    stream: RandomStream,
) -> ShapeSource:
    """Shape source for method 4 sized to cover every evaluation offset."""
    w = resolve_shape_window(model, grid, config)
    if config.shape_mode == "pooled":
        gen = stream.substream(4, 0, 0, 0, SHAPE)
        return PooledShapeSource(model, grid.step, w, config.pool_size, gen)
    return RejectionShapeSource(model, grid.step, w)


def method4(
    model: VariogramModel,
    grid: Grid,
    config: MethodConfig,
    stream: RandomStream,
    shapes: ShapeSource | None = None,
    rep: int = 0,
) -> FieldRealization:
    """Moving maxima over pre-conditioned shapes on lattice sites in [-v, v].

    Levels U_1 > U_2 > ... come from a stream of total intensity
    lambda_p * p * n_sites; sites are uniform over the lattice sites and
    shapes are iid from the shape source.  Shapes are nonpositive with
    F(0) = 0, so once the next level falls below the running field minimum
    the realization is final and the loop stops exactly.
    """
    b, p = grid.half_width, grid.step
    if config.v < b:
        raise InvalidWindow(f"site window v = {config.v} must be >= b = {b}")
    sv = window_steps(config.v, p)
    if shapes is None:
        shapes = make_shape_source(model, grid, config, stream)
    w_steps = shapes.steps
    if w_steps < grid.zero_index + sv:
        raise InvalidWindow(
            f"shape window ({w_steps} steps) cannot cover grid + sites ({grid.zero_index + sv})"
        )
    lam = _method4_lambda(model, grid, config, stream, shapes.half_width)
    n_sites = 2 * sv + 1
    total_intensity = lam * p * n_sites
    points_stream = GumbelPointStream(total_intensity, stream.substream(4, rep, 0, 0, POINTS))
    gen_sites = stream.substream(4, rep, 0, 0, MARKS)
    z = np.full(grid.size, -np.inf)
    used = 0
    stop = "fixed_k"
    nb = grid.zero_index
    while used < config.k_max:
        u = points_stream.next_point()
        if config.adaptive and used >= 1 and u < z.min():
            stop = "adaptive"
            break
        site = int(gen_sites.integers(n_sites)) - sv
        values = shapes.draw(stream.substream(4, rep, 0, used + 1, SHAPE))
        lo = w_steps - site - nb
        np.maximum(z, u + values[lo : lo + grid.size], out=z)
        used += 1
    return _finalize(grid, z, used, stop, config)


# ---------------------------------------------------------------------------

_METHODS = {0: method0, 1: method1, 2: method2, 3: method3, 4: method4}


def simulate(
    model: VariogramModel,
    grid: Grid,
    config: MethodConfig,
    stream: RandomStream,
    rep: int = 0,
    shapes: ShapeSource | None = None,
) -> FieldRealization:
    """Run the generator selected by config.method for one replication."""
    if config.method == 4:
        return method4(model, grid, config, stream, shapes=shapes, rep=rep)
    if config.method == 3:
        return method3(model, grid, config, stream, rep=rep)
    return _METHODS[config.method](model, grid, config, stream, rep=rep)
