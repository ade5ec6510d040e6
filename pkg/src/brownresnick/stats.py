"""Verification statistics: Gumbel-margin deviations and distribution tests.

The central metric is the exact Kolmogorov-Smirnov sup-distance between an
empirical marginal CDF and the standard Gumbel CDF exp(-exp(-x)), evaluated
at the interval edges and center.  dev(a) and dev(b) are the edge
deviations, dev(0) the center one, and DEV is the arithmetic mean of the
two edge deviations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .errors import BlockMismatch, EmptySample

#: Asymptotic two-sample KS critical-value coefficients c(alpha); the
#: threshold for samples of sizes n and m is c(alpha) * sqrt((n + m) / (n m)).
KS_COEFFICIENT = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628}


def gumbel_cdf(x):
    """Standard Gumbel CDF exp(-exp(-x)); underflows to 0 for very negative x."""
    with np.errstate(over="ignore"):
        return np.exp(-np.exp(-np.asarray(x, dtype=float)))


def ks_distance_to_gumbel(samples: np.ndarray) -> float:
    """Exact sup-distance of the empirical CDF of ``samples`` to the Gumbel CDF.

    Computed on the sorted sample as max over i of
    max(|i/n - G(x_(i))|, |(i-1)/n - G(x_(i))|).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise EmptySample("no samples")
    g = gumbel_cdf(x)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs(i / n - g), np.abs((i - 1) / n - g))))


def ks_two_sample(x: np.ndarray, y: np.ndarray) -> float:
    """Two-sample KS statistic sup_t |F_x(t) - F_y(t)|."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 or y.size == 0:
        raise EmptySample("two-sample KS needs nonempty samples")
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def ks_two_sample_critical(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value at level alpha."""
    return KS_COEFFICIENT[alpha] * np.sqrt((n + m) / (n * m))


@dataclass(frozen=True)
class DevSummary:
    """Gumbel-margin deviations at the interval edges and center."""

    dev_a: float
    dev_0: float
    dev_b: float
    n_reps: int

    @property
    def dev(self) -> float:
        """DEV, the arithmetic mean of the two edge deviations."""
        return (self.dev_a + self.dev_b) / 2.0


def dev_summary(at_a: np.ndarray, at_0: np.ndarray, at_b: np.ndarray) -> DevSummary:
    """Marginal deviation summary from samples at -b, 0 and +b."""
    samples = [np.asarray(s, dtype=float) for s in (at_a, at_0, at_b)]
    n = samples[0].size
    if any(s.size == 0 for s in samples):
        raise EmptySample("dev summary needs at least one sample per location")
    deva, dev0, devb = (ks_distance_to_gumbel(s) for s in samples)
    return DevSummary(dev_a=deva, dev_0=dev0, dev_b=devb, n_reps=n)


def max_stability_check(samples: np.ndarray, n: int) -> float:
    """KS statistic probing max-stability of a marginal sample.

    For n >= 2, compares blockwise maxima minus log(n) against the raw
    sample.  For n == 1 the identity is trivial, so the sample is split
    into halves and the halves are compared.
    """
    x = np.asarray(samples, dtype=float)
    if n < 1:
        raise BlockMismatch(f"block size must be >= 1, got {n}")
    if x.size % n != 0:
        raise BlockMismatch(f"sample count {x.size} not divisible by block size {n}")
    if n == 1:
        half = x.size // 2
        return ks_two_sample(x[:half], x[half:])
    blocks = x.reshape(-1, n).max(axis=1) - np.log(n)
    return ks_two_sample(blocks, x)


def stationarity_check(values: np.ndarray, grid, t1: float, t2: float) -> float:
    """KS statistic between marginal samples at two grid locations.

    ``values`` is a (reps, grid.size) matrix of realizations.  The two
    locations are read from disjoint halves of the replications so the
    compared samples are independent even when t1 == t2.
    """
    i1, i2 = grid.index_of(t1), grid.index_of(t2)
    vals = np.asarray(values, dtype=float)
    half = vals.shape[0] // 2
    if half == 0:
        raise EmptySample("need at least two replications")
    return ks_two_sample(vals[:half, i1], vals[half:, i2])


def poisson_counts_pvalue(counts: np.ndarray, mean: float) -> float:
    """Chi-square goodness-of-fit p-value of integer counts against Poisson.

    Cells with expected count below 5 are merged into their neighbours
    (upper tail into the last kept cell) before forming the statistic.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = counts.size
    if n == 0:
        raise EmptySample("no counts")
    kmax = int(counts.max())
    probs = scipy.stats.poisson.pmf(np.arange(kmax + 1), mean)
    tail = 1.0 - probs.sum()
    observed = np.bincount(counts, minlength=kmax + 1).astype(float)
    expected = probs * n
    # fold the analytic tail beyond kmax into the last cell
    expected[-1] += tail * n

    # merge low-expectation cells from the right, then from the left
    obs, exp = list(observed), list(expected)
    i = len(exp) - 1
    while i > 0 and exp[i] < 5.0:
        exp[i - 1] += exp[i]
        obs[i - 1] += obs[i]
        del exp[i], obs[i]
        i -= 1
    while len(exp) > 1 and exp[0] < 5.0:
        exp[1] += exp[0]
        obs[1] += obs[0]
        del exp[0], obs[0]
    obs_a, exp_a = np.array(obs), np.array(exp)
    if exp_a.size < 2:
        return 1.0
    stat = float(np.sum((obs_a - exp_a) ** 2 / exp_a))
    dof = exp_a.size - 1
    return float(scipy.stats.chi2.sf(stat, dof))
