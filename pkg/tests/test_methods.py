import dataclasses
import math

import numpy as np
import pytest

from brownresnick import (
    Grid,
    MethodConfig,
    RandomStream,
    build_covariance,
    ks_distance_to_gumbel,
    ks_two_sample,
    ks_two_sample_critical,
    method0,
    method1,
    method2,
    method3,
    method4,
    simulate,
)
from brownresnick.errors import ConfigError, InvalidLattice, InvalidWindow
from brownresnick.methods import make_shape_source
from brownresnick.rng import GAUSS, POINTS
from brownresnick.shape import RecordingShapeSource, lattice_sampler


def marginals(model, grid, config, stream, n, t_index, shapes=None):
    out = np.empty(n)
    for rep in range(n):
        r = simulate(model, grid, config, stream, rep=rep, shapes=shapes)
        out[rep] = r.values[t_index]
    return out


# ---------------------------------------------------------------------------
# configuration validation

def test_config_validation():
    with pytest.raises(ConfigError):
        MethodConfig(method=7)
    with pytest.raises(ConfigError):
        MethodConfig(method=0, k_max=0)
    with pytest.raises(ConfigError):
        MethodConfig(method=0, margins="weibull")
    with pytest.raises(InvalidLattice):
        MethodConfig(method=3, m=2)
    with pytest.raises(ConfigError):
        MethodConfig(method=2, v=0.0)
    cfg = MethodConfig(method=3, j_max=10)
    assert cfg.j_min == -10


def test_method4_window_must_cover_grid(brownian_model, grid_b2, stream):
    cfg = MethodConfig(method=4, v=1.0, lambda_p=0.4)
    with pytest.raises(InvalidWindow):
        method4(brownian_model, grid_b2, cfg, stream)


def test_method3_blocks_must_cover_grid(brownian_model, grid_b2, stream):
    cfg = MethodConfig(method=3, j_max=5)
    with pytest.raises(InvalidLattice):
        method3(brownian_model, grid_b2, cfg, stream)


# ---------------------------------------------------------------------------
# method 0

def test_method0_single_path_is_level_plus_path(brownian_model, grid_b1):
    stream = RandomStream(31)
    cfg = MethodConfig(method=0, k_max=1, adaptive=False)
    real = method0(brownian_model, grid_b1, cfg, stream, rep=0)
    # rebuild X_1 and xi_1 from the same substreams
    u = stream.substream(0, 0, 0, 0, POINTS).random(1)
    x1 = -np.log(np.cumsum(-np.log1p(-u)))[0]
    factor = build_covariance(brownian_model, grid_b1)
    z = stream.substream(0, 0, 0, 0, GAUSS).standard_normal((1, factor._sampler.n_free))
    xi1 = factor._sampler.sample_from_normals(z.T)[0]
    assert np.array_equal(real.values, x1 + xi1)
    assert real.paths_used == 1


def test_method0_monotone_in_budget(brownian_model, grid_b1):
    stream = RandomStream(32)
    small = method0(brownian_model, grid_b1, MethodConfig(method=0, k_max=50, adaptive=False), stream)
    large = method0(brownian_model, grid_b1, MethodConfig(method=0, k_max=100, adaptive=False), stream)
    assert np.all(large.values >= small.values)
    assert np.any(large.values > small.values) or np.array_equal(large.values, small.values)


def test_method0_fixed_budget_marginal_deviation(brownian_model):
    # b=1, p=0.05, k=1000 fixed, N=2000: center deviation within 0.05
    grid = Grid(half_width=1.0, step=0.05)
    cfg = MethodConfig(method=0, k_max=1000, adaptive=False)
    vals = marginals(brownian_model, grid, cfg, RandomStream(33), 2000, grid.zero_index)
    assert ks_distance_to_gumbel(vals) <= 0.05


def test_method0_determinism(brownian_model, grid_b1):
    a = method0(brownian_model, grid_b1, MethodConfig(method=0), RandomStream(3), rep=5)
    b = method0(brownian_model, grid_b1, MethodConfig(method=0), RandomStream(3), rep=5)
    assert np.array_equal(a.values, b.values)
    assert a.paths_used == b.paths_used and a.stop_reason == b.stop_reason


def test_frechet_margins_are_exp_of_gumbel(brownian_model, grid_b1):
    cfg = MethodConfig(method=0, k_max=50, adaptive=False)
    gum = method0(brownian_model, grid_b1, cfg, RandomStream(4))
    fre = method0(
        brownian_model, grid_b1, dataclasses.replace(cfg, margins="frechet"), RandomStream(4)
    )
    assert np.all(fre.values > 0.0)
    assert np.array_equal(fre.values, np.exp(gum.values))


# ---------------------------------------------------------------------------
# method 1

def test_method1_single_zero_shift_matches_method0(brownian_model, grid_b1):
    n = 2000
    c0 = MethodConfig(method=0, k_max=4000)
    c1 = MethodConfig(method=1, shifts=(0.0,), k_max=4000)
    v0 = marginals(brownian_model, grid_b1, c0, RandomStream(41), n, grid_b1.zero_index)
    v1 = marginals(brownian_model, grid_b1, c1, RandomStream(42), n, grid_b1.zero_index)
    assert ks_two_sample(v0, v1) < ks_two_sample_critical(n, n, alpha=0.01)


def test_method1_common_shift_translates_method0(brownian_model, grid_b1):
    # a single shift h: marginal at t = h matches method0's marginal at 0
    n = 2000
    h = 0.5
    c1 = MethodConfig(method=1, shifts=(h,), k_max=4000)
    v1 = marginals(brownian_model, grid_b1, c1, RandomStream(43), n, grid_b1.index_of(h))
    c0 = MethodConfig(method=0, k_max=4000)
    v0 = marginals(brownian_model, grid_b1, c0, RandomStream(44), n, grid_b1.zero_index)
    assert ks_two_sample(v0, v1) < ks_two_sample_critical(n, n, alpha=0.01)


# ---------------------------------------------------------------------------
# method 2

def test_method2_snapped_degenerate_interval_matches_method0(brownian_model, grid_b1):
    # I = [-p/2, p/2] with grid-snapped marks collapses every translation to 0
    n = 2000
    p = grid_b1.step
    c2 = MethodConfig(method=2, v=p / 2.0, snap_marks=True, k_max=4000)
    c0 = MethodConfig(method=0, k_max=4000)
    v2 = marginals(brownian_model, grid_b1, c2, RandomStream(51), n, grid_b1.zero_index)
    v0 = marginals(brownian_model, grid_b1, c0, RandomStream(52), n, grid_b1.zero_index)
    assert ks_two_sample(v0, v2) < ks_two_sample_critical(n, n, alpha=0.01)


def test_method2_wide_interval_margin(brownian_model, grid_b1):
    # I = [-4, 4], b = 1: center deviation within 0.05 at N = 2000
    n = 2000
    cfg = MethodConfig(method=2, v=4.0, k_max=16000)
    vals = marginals(brownian_model, grid_b1, cfg, RandomStream(53), n, grid_b1.zero_index)
    assert ks_distance_to_gumbel(vals) <= 0.05


def test_method2_translation_invariance(brownian_model, grid_b1):
    n = 2000
    cfg = MethodConfig(method=2, v=2.0, k_max=8000)
    stream = RandomStream(54)
    lo = np.empty(n)
    hi = np.empty(n)
    for rep in range(n):
        r = method2(brownian_model, grid_b1, cfg, stream, rep=rep)
        lo[rep], hi[rep] = r.values[0], r.values[-1]
    # disjoint replication halves at -b and +b
    stat = ks_two_sample(lo[: n // 2], hi[n // 2 :])
    assert stat < ks_two_sample_critical(n // 2, n // 2, alpha=0.01)


# ---------------------------------------------------------------------------
# method 3

def reconstruct_method3(model, grid, config, stream, rep):
    """Mini oracle: rebuild the block/filter/translate field from substreams."""
    p = grid.step
    nb = grid.zero_index
    window = nb + config.j_max
    sampler = lattice_sampler(model, p, window)
    z = np.full(grid.size, -np.inf)
    kept = 0
    for j in range(-config.j_max, config.j_max + 1):
        gen_pts = stream.substream(3, rep, j, 0, POINTS)
        gen_paths = stream.substream(3, rep, j, 0, GAUSS)
        total = 0.0
        for _ in range(config.k_max):
            total += -math.log1p(-gen_pts.random())
            x = -math.log(total)
            xi = sampler.sample(gen_paths)
            if np.argmax(xi) == window:  # argmax filter at the origin
                lo = window - j - nb
                np.maximum(z, x + xi[lo : lo + grid.size], out=z)
                kept += 1
    return z, kept


def test_method3_matches_reconstruction_and_filter(brownian_model):
    grid = Grid(half_width=1.0, step=0.25)
    cfg = MethodConfig(method=3, j_max=8, k_max=30)
    stream = RandomStream(61)
    real = method3(brownian_model, grid, cfg, stream, rep=0, early_stop=False)
    z, kept = reconstruct_method3(brownian_model, grid, cfg, stream, 0)
    # the oracle keeps only argmax-filtered paths, so agreement shows that
    # paths failing the filter contribute nothing; tolerance covers the
    # one-ulp gap between the batched and single-path BLAS kernels
    np.testing.assert_allclose(real.values, z, rtol=0, atol=1e-12)
    assert kept >= 1


def test_method3_early_stop_bit_identical(brownian_model):
    grid = Grid(half_width=1.0, step=0.25)
    cfg = MethodConfig(method=3, j_max=8, k_max=40)
    stream = RandomStream(62)
    for rep in range(5):
        stopped = method3(brownian_model, grid, cfg, stream, rep=rep, early_stop=True)
        full = method3(brownian_model, grid, cfg, stream, rep=rep, early_stop=False)
        assert np.array_equal(stopped.values, full.values)
        assert stopped.paths_used <= full.paths_used


# ---------------------------------------------------------------------------
# method 4

def test_method4_path_contributes_its_level_at_its_site(brownian_model, grid_b1, stream):
    cfg = MethodConfig(method=4, v=1.0, k_max=1, adaptive=False, lambda_p=0.4, shape_window=8.0)
    shapes = make_shape_source(brownian_model, grid_b1, cfg, stream)
    sites = np.arange(-10, 11) * grid_b1.step
    for rep in range(10):
        real = method4(brownian_model, grid_b1, cfg, stream, shapes=shapes, rep=rep)
        # F(0) = 0 and F <= 0: the single path peaks exactly at its site
        top = real.values.max()
        site = grid_b1.points[np.argmax(real.values)]
        assert any(abs(site - s) < 1e-12 for s in sites)
        assert np.sum(real.values == top) >= 1


def test_method4_stop_is_final(brownian_model, grid_b1, stream):
    cfg = MethodConfig(method=4, v=2.0, k_max=500, lambda_p=0.4, shape_window=8.0)
    shapes = make_shape_source(brownian_model, grid_b1, cfg, stream)
    for rep in range(5):
        adaptive = method4(brownian_model, grid_b1, cfg, stream, shapes=shapes, rep=rep)
        fixed = method4(
            brownian_model,
            grid_b1,
            dataclasses.replace(cfg, adaptive=False),
            stream,
            shapes=shapes,
            rep=rep,
        )
        assert np.array_equal(adaptive.values, fixed.values)
        assert adaptive.paths_used <= fixed.paths_used
        assert adaptive.stop_reason == "adaptive"


def test_method4_collected_shapes_iid_across_run(brownian_model, grid_b2, stream):
    # values at t = p from shapes drawn during a run: first and second half
    # must look identically distributed
    cfg = MethodConfig(method=4, v=4.0, k_max=400, lambda_p=0.418, shape_window=8.0)
    inner = make_shape_source(brownian_model, grid_b2, cfg, stream)
    recorder = RecordingShapeSource(inner)
    for rep in range(120):
        method4(brownian_model, grid_b2, cfg, stream, shapes=recorder, rep=rep)
    idx = recorder.steps + 1  # lattice point p
    vals = np.array([s[idx] for s in recorder.drawn])
    half = vals.size // 2
    stat = ks_two_sample(vals[:half], vals[half:])
    assert stat < ks_two_sample_critical(half, vals.size - half, alpha=0.01)


def test_method4_window_ten_margin(brownian_model, grid_b2, stream):
    # alpha=1, b=2, p=0.1, v=10, estimated intensity constant, N=2000
    n = 2000
    cfg = MethodConfig(method=4, v=10.0, k_max=4000, shape_mode="pooled", pool_size=8192)
    shapes = make_shape_source(brownian_model, grid_b2, cfg, stream)
    vals = marginals(brownian_model, grid_b2, cfg, stream, n, grid_b2.zero_index, shapes=shapes)
    assert ks_distance_to_gumbel(vals) <= 0.05


def test_budget_monotonicity_methods_1_and_2(brownian_model, grid_b1):
    for mid, extra in ((1, {"shifts": (-0.5, 0.5)}), (2, {"v": 1.0})):
        small = simulate(
            brownian_model, grid_b1,
            MethodConfig(method=mid, k_max=20, adaptive=False, **extra),
            RandomStream(71 + mid),
        )
        large = simulate(
            brownian_model, grid_b1,
            MethodConfig(method=mid, k_max=40, adaptive=False, **extra),
            RandomStream(71 + mid),
        )
        assert np.all(large.values >= small.values), f"method {mid}"


def test_simulate_dispatches_all_methods(brownian_model, stream):
    grid = Grid(half_width=1.0, step=0.25)
    for mid, extra in (
        (0, {}),
        (1, {"shifts": (-0.5, 0.5)}),
        (2, {"v": 1.0}),
        (3, {"j_max": 6, "k_max": 50}),
        (4, {"v": 1.0, "lambda_p": 0.4, "shape_window": 6.0, "k_max": 100}),
    ):
        cfg = MethodConfig(method=mid, **extra)
        real = simulate(brownian_model, grid, cfg, stream, rep=0)
        again = simulate(brownian_model, grid, cfg, stream, rep=0)
        assert np.all(np.isfinite(real.values))
        assert real.values.shape == (grid.size,)
        assert real.stop_reason in ("fixed_k", "adaptive")
        # full config + seed determine the realization bit-for-bit
        assert np.array_equal(real.values, again.values)
        assert real.paths_used == again.paths_used
