import math

import numpy as np
import pytest

from brownresnick import (
    PooledShapeSource,
    RandomStream,
    RejectionShapeSource,
    VariogramModel,
    estimate_lambda_p,
    ks_two_sample,
    ks_two_sample_critical,
    sample_shape,
)
from brownresnick.errors import RejectionBudgetExceeded, ZeroAcceptance
from brownresnick.shape import default_window

# analytic lower bound for the acceptance probability at lattice step p:
# (1/4) * (1 - exp(-p/2))^2
ACCEPT_LOWER_P1 = 0.25 * (1.0 - math.exp(-0.5)) ** 2


def brute_force_conditioned_values(alpha, scale, p, w, n_accepted, seed, at):
    """Independent oracle: simulate unconditioned pinned drifted paths with
    hand-rolled covariance code and keep those whose argmax sits at 0."""
    steps = round(w / p)
    pts = np.arange(-steps, steps + 1) * p
    free = pts != 0.0
    u = pts[free]
    gamma = lambda h: scale * np.abs(h) ** alpha
    cov = np.empty((u.size, u.size))
    for i in range(u.size):
        for j in range(u.size):
            cov[i, j] = gamma(u[i]) + gamma(u[j]) - gamma(u[i] - u[j])
    chol = np.linalg.cholesky(cov + 1e-12 * np.eye(u.size))
    gen = np.random.default_rng(seed)
    out = []
    at_idx = round(at / p) + steps
    while len(out) < n_accepted:
        z = gen.standard_normal((u.size, 256))
        paths = np.zeros((256, pts.size))
        paths[:, free] = (chol @ z).T - gamma(u)
        keep = np.argmax(paths, axis=1) == steps
        out.extend(paths[keep, at_idx].tolist())
    return np.array(out[:n_accepted])


def test_accepted_shapes_satisfy_invariants(brownian_model, stream):
    p, w = 1.0, 20.0
    for i in range(200):
        s = sample_shape(brownian_model, p, w, stream.substream(4, 0, 0, i, 3))
        mid = s.values.size // 2
        assert s.values[mid] == 0.0
        assert s.value_at(0.0) == 0.0
        assert np.all(s.values <= 0.0)
        assert np.argmax(s.values) == mid


def test_acceptance_rate_meets_analytic_lower_bound(brownian_model, stream):
    n = 100_000
    est = estimate_lambda_p(brownian_model, 1.0, 20.0, n, stream.substream(4, 1))
    se = math.sqrt(est.acceptance_rate * (1.0 - est.acceptance_rate) / n)
    assert est.acceptance_rate >= ACCEPT_LOWER_P1 - 4.0 * se


def test_conditioned_marginal_matches_brute_force_oracle(brownian_model, stream):
    p, w, n = 1.0, 12.0, 1500
    ours = np.empty(n)
    gen = stream.substream(4, 2)
    for i in range(n):
        ours[i] = sample_shape(brownian_model, p, w, gen).value_at(p)
    oracle = brute_force_conditioned_values(1.0, 0.5, p, w, n, seed=99, at=p)
    stat = ks_two_sample(ours, oracle)
    assert stat < ks_two_sample_critical(n, n, alpha=0.01)


def test_rejection_budget_exceeded():
    # near-linear paths peak at the window edge, never at the origin
    degenerate = VariogramModel(alpha=2.0, scale=1e-6)
    with pytest.raises(RejectionBudgetExceeded):
        sample_shape(degenerate, 0.1, 4.0, RandomStream(1).substream(0), max_attempts=256)


def test_lambda_estimate_large_step(brownian_model, stream):
    # for large p the drift forces the argmax to 0 almost surely
    est = estimate_lambda_p(brownian_model, 10.0, 40.0, 100_000, stream.substream(4, 3))
    assert 0.85 <= est.lambda_p * 10.0 <= 1.05


def test_lambda_times_p_dominates_acceptance_rate(brownian_model, stream):
    for sub in range(3):
        est = estimate_lambda_p(brownian_model, 1.0, 20.0, 20_000, stream.substream(4, 10 + sub))
        assert est.lambda_p * 1.0 >= est.acceptance_rate


def test_lambda_zero_acceptance():
    degenerate = VariogramModel(alpha=2.0, scale=1e-6)
    with pytest.raises(ZeroAcceptance):
        estimate_lambda_p(degenerate, 0.1, 4.0, 1000, RandomStream(2).substream(0))


def test_lambda_standard_error_scales_inverse_sqrt_n(brownian_model, stream):
    n = 25_000
    e1 = estimate_lambda_p(brownian_model, 1.0, 20.0, n, stream.substream(4, 20))
    e2 = estimate_lambda_p(brownian_model, 1.0, 20.0, 4 * n, stream.substream(4, 21))
    ratio = (e2.standard_error * math.sqrt(4 * n)) / (e1.standard_error * math.sqrt(n))
    assert 0.8 <= ratio <= 1.25


def test_lambda_window_insensitive(brownian_model, stream):
    e1 = estimate_lambda_p(brownian_model, 1.0, 20.0, 100_000, stream.substream(4, 30))
    e2 = estimate_lambda_p(brownian_model, 1.0, 40.0, 100_000, stream.substream(4, 31))
    combined = math.hypot(e1.standard_error, e2.standard_error)
    assert abs(e1.lambda_p - e2.lambda_p) <= 3.0 * combined


def test_default_window_formula():
    assert default_window(VariogramModel(alpha=1.0, scale=0.5), 2.0) == 22.0
    wide = default_window(VariogramModel(alpha=1.5, scale=1.0), 2.0)
    assert wide == 2.0 + 20.0 * 2.0 ** (1.0 / 0.5)
    assert default_window(VariogramModel(alpha=2.0, scale=1.0), 2.0) == 22.0


def test_pooled_source_draws_pool_rows(brownian_model, stream):
    pool = PooledShapeSource(brownian_model, 1.0, 10.0, 64, stream.substream(4, 40))
    assert pool.pool.shape == (64, 21)
    draw = pool.draw(stream.substream(4, 41))
    assert any(np.array_equal(draw, row) for row in pool.pool)


def test_sources_are_deterministic(brownian_model):
    src = RejectionShapeSource(brownian_model, 1.0, 10.0)
    a = src.draw(RandomStream(7).substream(4, 0, 0, 1, 3))
    b = src.draw(RandomStream(7).substream(4, 0, 0, 1, 3))
    assert np.array_equal(a, b)
