"""Lattice shape measure: rejection sampling and the intensity constant.

A shape function F is the drifted path xi = W - sigma^2/2 on the lattice
(p * Z) intersected with [-w, w], conditioned on its (smallest) argmax
sitting at the origin.  Because the path is pinned at xi(0) = 0, accepted
paths satisfy F(0) = 0 and F <= 0 everywhere, and are returned unchanged.

The intensity constant lambda_p that makes the decomposition
(argmax location, level, shape) a product measure satisfies

    lambda_p * p = E[ exp(M) * 1{argmax at 0} ]

with M the lattice maximum of xi.  For the pinned field M = 0 on the
acceptance event, so the estimator reduces to the acceptance frequency
divided by p; the general form is kept so the identity stays visible.
Argmaxima are computed on the truncated window only; the estimator reports
the fraction of argmaxima falling in the outer tenth of the window as an
escape diagnostic.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    InvalidWindow,
    RejectionBudgetExceeded,
    ZeroAcceptance,
)
from .gauss import PathSampler, VariogramModel

_REJECTION_BATCH = 64
_MAX_ATTEMPTS = 10**6

_sampler_cache: dict = {}
_sampler_lock = threading.Lock()


def window_steps(w: float, p: float) -> int:
    steps = round(w / p)
    if steps < 1 or abs(steps * p - w) > 1e-9 * max(1.0, w):
        raise ConfigError(f"window {w} is not an integer multiple of step {p}")
    return steps


def lattice_sampler(model: VariogramModel, p: float, steps: int) -> PathSampler:
    """Shared path sampler on (p*Z) within [-steps*p, steps*p]."""
    key = (model.alpha, model.scale, p, steps)
    with _sampler_lock:
        sampler = _sampler_cache.get(key)
    if sampler is None:
        points = np.arange(-steps, steps + 1, dtype=np.int64) * p
        sampler = PathSampler(model, points)
        with _sampler_lock:
            _sampler_cache.setdefault(key, sampler)
    return sampler


def default_window(model: VariogramModel, b: float) -> float:
    """Window half-width at which the drift dominates path fluctuation.

    b + 20 * max(1, (2 * scale) ** (1 / (2 - alpha))); for alpha = 2 the
    exponent degenerates and the base width b + 20 is used.
    """
    if model.alpha >= 2.0:
        factor = 1.0
    else:
        factor = max(1.0, (2.0 * model.scale) ** (1.0 / (2.0 - model.alpha)))
    return b + 20.0 * factor


@dataclass(frozen=True)
class ShapeFunction:
    """Values of one accepted shape on (p*Z) within [-w, w]."""

    step: float
    half_width: float
    values: np.ndarray

    @property
    def steps(self) -> int:
        return (self.values.size - 1) // 2

    def value_at(self, t: float) -> float:
        i = round(t / self.step) + self.steps
        if not 0 <= i < self.values.size:
            raise InvalidWindow(f"{t} outside shape window [-{self.half_width}, {self.half_width}]")
        return float(self.values[i])


@dataclass(frozen=True)
class LambdaEstimate:
    """Monte-Carlo estimate of the lattice intensity constant."""

    lambda_p: float
    standard_error: float
    acceptance_rate: float
    n_samples: int
    edge_fraction: float  # argmaxima in the outer tenth of the window

    def as_dict(self) -> dict:
        return {
            "lambda_p": self.lambda_p,
            "standard_error": self.standard_error,
            "acceptance_rate": self.acceptance_rate,
            "n_samples": self.n_samples,
            "edge_fraction": self.edge_fraction,
        }


def _accepted_rows(sampler: PathSampler, gen: np.random.Generator, batch: int):
    paths = sampler.sample_batch(gen, batch)
    center = sampler.points.size // 2
    accept = np.argmax(paths, axis=1) == center
    return paths, accept


def sample_shape(
    model: VariogramModel,
    p: float,
    w: float,
    gen: np.random.Generator,
    max_attempts: int = _MAX_ATTEMPTS,
) -> ShapeFunction:
    """Draw one shape by rejection: resimulate xi until its argmax is at 0.

    Attempts are drawn in small batches from ``gen``; the first accepted
    path in attempt order is returned, so the draw is a deterministic
    function of the generator state.
    """
    steps = window_steps(w, p)
    sampler = lattice_sampler(model, p, steps)
    attempts = 0
    while attempts < max_attempts:
        batch = min(_REJECTION_BATCH, max_attempts - attempts)
        paths, accept = _accepted_rows(sampler, gen, batch)
        if accept.any():
            values = paths[np.argmax(accept)].copy()
            values.flags.writeable = False
            return ShapeFunction(step=p, half_width=steps * p, values=values)
        attempts += batch
    raise RejectionBudgetExceeded(
        f"no acceptance in {max_attempts} attempts (alpha={model.alpha}, "
        f"scale={model.scale}, p={p}, w={w})"
    )


def estimate_lambda_p(
    model: VariogramModel,
    p: float,
    w: float,
    n_samples: int,
    gen: np.random.Generator,
    batch: int = 4096,
) -> LambdaEstimate:
    """Estimate lambda_p from unconditioned drifted paths on the window.

    lambda_p_hat = (1 / (n p)) * sum_j exp(M_j) 1{T_j = 0}; the standard
    error is the sample standard deviation of the per-path terms divided
    by sqrt(n) (the estimator is linear in the sample mean).
    """
    if n_samples < 1:
        raise ConfigError(f"need n_samples >= 1, got {n_samples}")
    steps = window_steps(w, p)
    sampler = lattice_sampler(model, p, steps)
    center = steps
    edge = max(1, int(0.9 * steps))

    total = 0.0
    total_sq = 0.0
    accepted = 0
    edge_hits = 0
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        paths = sampler.sample_batch(gen, m)
        arg = np.argmax(paths, axis=1)
        hit = arg == center
        # exp(M) = 1 exactly for the pinned field, but keep the identity
        terms = np.exp(paths[np.flatnonzero(hit), arg[hit]])
        total += float(terms.sum())
        total_sq += float((terms**2).sum())
        accepted += int(hit.sum())
        edge_hits += int(np.sum(np.abs(arg - center) >= edge))
        done += m

    if accepted == 0:
        raise ZeroAcceptance(
            f"no path had its argmax at 0 in {n_samples} samples "
            f"(alpha={model.alpha}, p={p}, w={w})"
        )
    n = n_samples
    mean = total / n
    var = max(total_sq / n - mean**2, 0.0) * n / max(n - 1, 1)
    return LambdaEstimate(
        lambda_p=mean / p,
        standard_error=math.sqrt(var / n) / p,
        acceptance_rate=accepted / n,
        n_samples=n,
        edge_fraction=edge_hits / n,
    )


class ShapeSource:
    """Supplier of iid shape draws for the moving-maxima generator."""

    step: float
    half_width: float

    def draw(self, gen: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    @property
    def steps(self) -> int:
        return round(self.half_width / self.step)


class RejectionShapeSource(ShapeSource):
    """Fresh rejection draw per request; exact but costly for small p."""

    def __init__(self, model: VariogramModel, p: float, w: float):
        self.model = model
        self.step = p
        self.half_width = window_steps(w, p) * p

    def draw(self, gen: np.random.Generator) -> np.ndarray:
        return sample_shape(self.model, self.step, self.half_width, gen).values


class PooledShapeSource(ShapeSource):
    """Pre-sampled pool of shapes; a draw picks one uniformly at random.

    Draws are identically distributed but only approximately independent
    (two draws can repeat a pool entry).  With pools of a few thousand
    entries the effect on marginal statistics is negligible, and building
    the pool once makes large replication studies orders of magnitude
    cheaper than fresh rejection per draw.
    """

    def __init__(
        self,
        model: VariogramModel,
        p: float,
        w: float,
        size: int,
        gen: np.random.Generator,
        batch: int = 2048,
    ):
        if size < 1:
            raise ConfigError(f"pool size must be >= 1, got {size}")
        self.model = model
        self.step = p
        steps = window_steps(w, p)
        self.half_width = steps * p
        sampler = lattice_sampler(model, p, steps)
        rows = []
        have = 0
        attempts = 0
        while have < size:
            paths, accept = _accepted_rows(sampler, gen, batch)
            taken = paths[accept]
            rows.append(taken)
            have += taken.shape[0]
            attempts += batch
            if attempts >= _MAX_ATTEMPTS and have == 0:
                raise RejectionBudgetExceeded(
                    f"no acceptance in {attempts} attempts while building pool"
                )
        self.pool = np.vstack(rows)[:size]
        self.attempts = attempts

    def draw(self, gen: np.random.Generator) -> np.ndarray:
        return self.pool[gen.integers(self.pool.shape[0])]


class RecordingShapeSource(ShapeSource):
    """Wrapper that logs every drawn shape; used by verification tests."""

    def __init__(self, inner: ShapeSource):
        self.inner = inner
        self.step = inner.step
        self.half_width = inner.half_width
        self.drawn: list[np.ndarray] = []

    def draw(self, gen: np.random.Generator) -> np.ndarray:
        values = self.inner.draw(gen)
        self.drawn.append(values)
        return values


# ---------------------------------------------------------------------------
# JSON sidecar cache for lambda estimates, keyed by (alpha, scale, p, w).

def _cache_key(model: VariogramModel, p: float, w: float) -> str:
    return f"{model.alpha!r}|{model.scale!r}|{p!r}|{w!r}"


def load_lambda_cache(path: str) -> dict:
    if not os.path.exists(path):
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def cached_lambda(path: str, model: VariogramModel, p: float, w: float):
    entry = load_lambda_cache(path).get(_cache_key(model, p, w))
    if entry is None:
        return None
    return LambdaEstimate(**entry)


def store_lambda(path: str, model: VariogramModel, p: float, w: float, est: LambdaEstimate):
    cache = load_lambda_cache(path)
    cache[_cache_key(model, p, w)] = est.as_dict()
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(cache, fh, indent=2, sort_keys=True)
    os.replace(tmp, path)
