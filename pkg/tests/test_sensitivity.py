"""Estimator correctness against analytic and brute-force oracles."""

import numpy as np
import pytest

from wcam.errors import InvalidParamError, NonFiniteError, ShapeError
from wcam.sampling import Sampler, SamplerKind, draw_design, pivot_columns
from wcam.sensitivity import (
    ScoredDesign,
    jansen_estimate,
    sobol_hoeffding_check,
)


def score_design(f, design):
    """Score A, B and every C^(k) with a vectorized model ``f``."""
    fa = f(design.A)
    fb = f(design.B)
    fc = np.stack([f(pivot_columns(design, k)) for k in range(design.dim)])
    return ScoredDesign(fA=fa, fB=fb, fC=fc)


def total_index_double_loop(f, dim, k, rng, n_outer=10_000, n_inner=100):
    """Brute-force total index: E_outer[Var_inner(f | X_-k)] / Var(f).

    The inner sample variance is unbiased at any inner size, so the outer
    loop gets most of the 10^6-evaluation budget to shrink the dominant
    error term.
    """
    base = rng.random((n_outer, dim))
    inner = rng.random((n_outer, n_inner))
    tiled = np.repeat(base[:, None, :], n_inner, axis=1)
    tiled[:, :, k] = inner
    values = f(tiled.reshape(-1, dim)).reshape(n_outer, n_inner)
    inner_var = values.var(axis=1, ddof=1)
    big = f(rng.random((200_000, dim)))
    return float(inner_var.mean() / big.var(ddof=1))


def test_constant_scorer_is_degenerate():
    scores = ScoredDesign(
        fA=np.full(8, 0.5), fB=np.full(8, 0.5), fC=np.full((3, 8), 0.5)
    )
    result = jansen_estimate(scores)
    assert result.degenerate
    assert np.all(result.first_order == 0.0)
    assert np.all(result.total == 0.0)
    assert result.f_empty == pytest.approx(0.5)


def test_additive_model_matches_analytic_indices():
    # f(X) = X1 + 2*X2: S = a_k^2 / sum(a^2) = (0.2, 0.8)
    def f(x):
        return x[:, 0] + 2.0 * x[:, 1]

    design = draw_design(SamplerKind(Sampler.SOBOL, seed=123), 4096, 2)
    result = jansen_estimate(score_design(f, design))
    assert result.first_order[0] == pytest.approx(0.2, abs=0.02)
    assert result.first_order[1] == pytest.approx(0.8, abs=0.02)
    assert result.total[0] == pytest.approx(0.2, abs=0.02)
    assert result.total[1] == pytest.approx(0.8, abs=0.02)
    # Monte Carlo cross-check of the analytic values.
    rng = np.random.default_rng(99)
    mc = total_index_double_loop(f, 2, 0, rng)
    assert mc == pytest.approx(0.2, abs=0.01)


def test_interaction_model_against_double_loop_oracle():
    # f(X) = X1 * X2 carries interaction mass: totals exceed first order.
    def f(x):
        return x[:, 0] * x[:, 1]

    design = draw_design(SamplerKind(Sampler.SOBOL, seed=5), 4096, 2)
    result = jansen_estimate(score_design(f, design))
    rng = np.random.default_rng(31)
    for k in range(2):
        oracle = total_index_double_loop(f, 2, k, rng)
        assert result.total[k] == pytest.approx(oracle, abs=0.03)
        assert result.total[k] - result.first_order[k] > 0.1


def test_total_at_least_first_order():
    def f(x):
        return np.sin(3 * x[:, 0]) + x[:, 1] * x[:, 2] + 0.3 * x[:, 2]

    design = draw_design(SamplerKind(Sampler.SOBOL, seed=8), 4096, 3)
    result = jansen_estimate(score_design(f, design))
    assert np.all(result.total >= result.first_order - 0.02)
    assert np.all(result.total >= -0.02)


def test_affine_scale_invariance():
    def f(x):
        return x[:, 0] + 0.5 * x[:, 1] ** 2

    design = draw_design(SamplerKind(Sampler.HALTON, seed=2), 512, 2)
    base = score_design(f, design)
    scaled = ScoredDesign(
        fA=3.0 * base.fA - 1.0, fB=3.0 * base.fB - 1.0, fC=3.0 * base.fC - 1.0
    )
    r1 = jansen_estimate(base)
    r2 = jansen_estimate(scaled)
    np.testing.assert_allclose(r1.first_order, r2.first_order, atol=1e-12)
    np.testing.assert_allclose(r1.total, r2.total, atol=1e-12)


def test_deterministic_bitwise():
    def f(x):
        return x[:, 0] * np.exp(x[:, 1])

    design = draw_design(SamplerKind(Sampler.LATIN_HYPERCUBE, seed=4), 128, 2)
    scores = score_design(f, design)
    r1 = jansen_estimate(scores)
    r2 = jansen_estimate(scores)
    np.testing.assert_array_equal(r1.first_order, r2.first_order)
    np.testing.assert_array_equal(r1.total, r2.total)


def test_estimator_stats_match_definition():
    fa = np.array([0.1, 0.4, 0.3, 0.9])
    scores = ScoredDesign(fA=fa, fB=fa[::-1].copy(), fC=np.tile(fa, (2, 1)))
    result = jansen_estimate(scores)
    assert result.f_empty == pytest.approx(np.mean(fa), abs=1e-15)
    assert result.variance == pytest.approx(np.var(fa, ddof=1), abs=1e-15)


def test_scored_design_validation():
    with pytest.raises(ShapeError):
        ScoredDesign(fA=np.zeros(4), fB=np.zeros(3), fC=np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        ScoredDesign(fA=np.zeros(4), fB=np.zeros(4), fC=np.zeros((2, 3)))
    bad = np.zeros(4)
    bad[1] = np.inf
    with pytest.raises(NonFiniteError):
        ScoredDesign(fA=bad, fB=np.zeros(4), fC=np.zeros((2, 4)))
    with pytest.raises(InvalidParamError):
        jansen_estimate(ScoredDesign(fA=np.zeros(1), fB=np.zeros(1), fC=np.zeros((1, 1))))


# --- exhaustive decomposition oracle ------------------------------------


def test_decomposition_zero_function():
    table = sobol_hoeffding_check(lambda x: 0.0, 3)
    assert table.total_variance == 0.0
    assert all(v == 0.0 for v in table.partial_variance.values())


def test_decomposition_xor_is_pure_interaction():
    table = sobol_hoeffding_check(lambda x: float(int(x[0]) ^ int(x[1])), 2)
    assert table.first_order[0] == pytest.approx(0.0, abs=1e-12)
    assert table.first_order[1] == pytest.approx(0.0, abs=1e-12)
    assert table.index(frozenset({0, 1})) == pytest.approx(1.0, abs=1e-12)
    assert table.total[0] == pytest.approx(1.0, abs=1e-12)
    assert table.total[1] == pytest.approx(1.0, abs=1e-12)


def test_decomposition_additive_has_no_interactions():
    table = sobol_hoeffding_check(lambda x: 1.0 * x[0] + 2.0 * x[1] - 0.5 * x[2], 3)
    parts = sum(table.partial_variance.values())
    assert parts == pytest.approx(table.total_variance, abs=1e-12)
    for subset, var in table.partial_variance.items():
        if len(subset) > 1:
            assert var == pytest.approx(0.0, abs=1e-12)
    # Var(a_k X_k) = a_k^2 / 4 on uniform binary inputs.
    weights2 = np.array([1.0, 4.0, 0.25])
    np.testing.assert_allclose(table.first_order, weights2 / weights2.sum(), atol=1e-12)


def test_decomposition_partial_variances_sum_to_total():
    rng = np.random.default_rng(20)
    lut = rng.random(8)

    def f(x):
        idx = int(x[0]) + 2 * int(x[1]) + 4 * int(x[2])
        return float(lut[idx])

    table = sobol_hoeffding_check(f, 3)
    assert sum(table.partial_variance.values()) == pytest.approx(
        table.total_variance, abs=1e-12
    )


def test_decomposition_dim_guard():
    with pytest.raises(InvalidParamError):
        sobol_hoeffding_check(lambda x: 0.0, 13)
    with pytest.raises(InvalidParamError):
        sobol_hoeffding_check(lambda x: 0.0, 0)
