"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines.  Every tolerance is pinned here; the oracles (explicit matrices,
exhaustive enumeration, double-loop Monte Carlo) are computed inside the
tests and never share the estimation path they check.
"""

import time
from itertools import permutations

import numpy as np
import pytest

from wcam.analysis import scale_embed, spatial_project
from wcam.metrics import AttributionGrid, FeatureSpace, deletion, insertion, mu_fidelity
from wcam.pipeline import WCAMap, WcamConfig, compute_wcam
from wcam.sampling import Sampler, SamplerKind, draw_design, pivot_columns
from wcam.scorers import (
    CountingScorer,
    PixelRegionMean,
    SyntheticModel,
    SyntheticScorer,
    WaveletLinear,
)
from wcam.sensitivity import ScoredDesign, jansen_estimate, sobol_hoeffding_check
from wcam.wavelet import (
    Orientation,
    SubbandId,
    WaveletFamily,
    WaveletSpec,
    dwt_forward,
    dwt_inverse,
    subband_region,
)


def report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {name}: {status}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# -------------------------------------------------------------------------


def test_dwt_round_trip_and_energy():
    rng = np.random.default_rng(2024)
    started = time.monotonic()
    max_err = 0.0
    max_energy_err = 0.0
    for trial in range(1000):
        family = WaveletFamily.HAAR if trial % 2 == 0 else WaveletFamily.DAUBECHIES4
        levels = int(rng.integers(1, 5))
        step = 1 << levels
        h = int(rng.integers(max(8, step) // step, 256 // step + 1)) * step
        w = int(rng.integers(max(8, step) // step, 256 // step + 1)) * step
        channels = 3 if trial % 5 == 0 else 1
        img = rng.random((h, w, channels))
        spec = WaveletSpec(family, levels)
        pyr = dwt_forward(img, spec)
        rec = dwt_inverse(pyr)
        max_err = max(max_err, float(np.max(np.abs(rec - img))))
        e_pix = float(np.sum(img**2))
        max_energy_err = max(
            max_energy_err, abs(float(np.sum(pyr.channels**2)) - e_pix) / e_pix
        )
    elapsed = time.monotonic() - started
    report(
        "dwt-round-trip",
        max_err <= 1e-9 and max_energy_err <= 1e-9 and elapsed < 30.0,
        f"max_err={max_err:.2e} energy_err={max_energy_err:.2e} t={elapsed:.1f}s",
    )


def _score_rows(f, design):
    fa = f(design.A)
    fb = f(design.B)
    fc = np.stack([f(pivot_columns(design, k)) for k in range(design.dim)])
    return ScoredDesign(fA=fa, fB=fb, fC=fc)


def test_jansen_additive_oracle():
    started = time.monotonic()

    def f(x):
        return x[:, 0] + 2.0 * x[:, 1] + 0.0 * x[:, 2]

    design = draw_design(SamplerKind(Sampler.SOBOL, seed=1), 4096, 3)
    result = jansen_estimate(_score_rows(f, design))
    analytic = np.array([0.2, 0.8, 0.0])
    err_first = float(np.max(np.abs(result.first_order - analytic)))
    err_total = float(np.max(np.abs(result.total - analytic)))
    elapsed = time.monotonic() - started
    report(
        "jansen-additive",
        err_first <= 0.02 and err_total <= 0.02 and elapsed < 5.0,
        f"err_first={err_first:.4f} err_total={err_total:.4f} t={elapsed:.1f}s",
    )


def test_jansen_interaction_against_double_loop():
    def f(x):
        return x[:, 0] * x[:, 1]

    design = draw_design(SamplerKind(Sampler.SOBOL, seed=2), 4096, 2)
    result = jansen_estimate(_score_rows(f, design))

    # 10^6-evaluation double-loop oracle per feature.
    rng = np.random.default_rng(7)
    worst = 0.0
    big = f(rng.random((200_000, 2)))
    total_var = big.var(ddof=1)
    for k in range(2):
        outer = rng.random((10_000, 2))
        inner = rng.random((10_000, 100))
        tiled = np.repeat(outer[:, None, :], 100, axis=1)
        tiled[:, :, k] = inner
        values = f(tiled.reshape(-1, 2)).reshape(10_000, 100)
        oracle = values.var(axis=1, ddof=1).mean() / total_var
        worst = max(worst, abs(float(result.total[k]) - float(oracle)))
    report("jansen-interaction", worst <= 0.03, f"max|est-oracle|={worst:.4f}")


def test_sobol_hoeffding_exhaustive():
    rng = np.random.default_rng(11)
    lut = rng.random(8)
    cases = [
        lambda x: 1.0 * x[0] + 2.0 * x[1] - 0.5 * x[2],
        lambda x: float(int(x[0]) ^ int(x[1])) + 0.25 * x[2],
        lambda x: float(lut[int(x[0]) * 4 + int(x[1]) * 2 + int(x[2])]),
    ]
    worst = 0.0
    for f in cases:
        table = sobol_hoeffding_check(f, 3)
        gap = abs(sum(table.partial_variance.values()) - table.total_variance)
        worst = max(worst, gap)
    report("sobol-hoeffding", worst <= 1e-12, f"max|sum-total|={worst:.2e}")


def test_end_to_end_linear_scorer_wcam():
    started = time.monotonic()
    g, levels, side = 8, 2, 16
    spec = WaveletSpec(WaveletFamily.HAAR, levels)
    rng = np.random.default_rng(3)
    img = rng.random((side, side, 1))

    # Scorer weights live entirely in the level-2 horizontal subband.
    band = SubbandId(2, Orientation.HORIZONTAL)
    r0, c0, r1, c1 = subband_region(spec, (side, side), band)
    weights = np.zeros((side, side))
    weights[r0:r1, c0:c1] = rng.normal(size=(r1 - r0, c1 - c0))

    cfg = WcamConfig(
        grid_size=g, n_design=4096, wavelet=spec,
        sampler=SamplerKind(Sampler.SOBOL, seed=4),
        batch_size=8192, clamp_output=False,
    )
    scorer = SyntheticScorer(WaveletLinear(weights, spec), max_batch=8192)
    result = compute_wcam(img, 0, scorer, cfg)

    total = np.maximum(result.total_indices, 0.0)
    gr0, gc0, gr1, gc1 = subband_region(spec, (g, g), band)
    band_mass = total[gr0:gr1, gc0:gc1].sum() / total.sum()

    # Independent oracle: the induced mask function is linear with per-cell
    # weights a_cell; estimate each total index by a double-loop Monte
    # Carlo over the mask variables (10^6 evaluations per cell).
    coeffs = dwt_forward(img, spec).channels.sum(axis=0)
    factor = side // g
    a_cell = (weights * coeffs).reshape(g, factor, g, factor).sum(axis=(1, 3)).ravel()
    orng = np.random.default_rng(8)
    base_u = orng.random((200_000, g * g))
    var_f = (base_u @ a_cell).var(ddof=1)
    worst = 0.0
    for k in range(g * g):
        outer = orng.random((10_000, g * g))
        base = outer @ a_cell
        inner = orng.random((10_000, 100))
        values = base[:, None] + a_cell[k] * (inner - outer[:, [k]])
        oracle = values.var(axis=1, ddof=1).mean() / var_f
        worst = max(worst, abs(float(result.total_indices.ravel()[k]) - float(oracle)))

    elapsed = time.monotonic() - started
    report(
        "e2e-linear-wcam",
        band_mass >= 0.95 and worst <= 0.03 and elapsed < 60.0,
        f"band_mass={band_mass:.3f} max|est-oracle|={worst:.4f} t={elapsed:.1f}s",
    )


def test_forward_count_default_config():
    cfg = WcamConfig(batch_size=128)  # defaults: g=28, N=8, levels=2
    counter = CountingScorer(
        SyntheticScorer(PixelRegionMean(region=(0, 0, 112, 112)), max_batch=128)
    )
    img = np.random.default_rng(5).random((224, 224, 3))
    result = compute_wcam(img, 0, counter, cfg)
    ok = counter.images_scored == 6288 == result.n_forwards
    report("forward-count", ok, f"scored={counter.images_scored}")


def test_mu_fidelity_identity_and_endpoints():
    rng = np.random.default_rng(6)
    side, g = 8, 4
    spec = WaveletSpec(levels=1)
    img = rng.random((side, side, 1))
    w = rng.normal(size=(side, side))
    scorer = SyntheticScorer(WaveletLinear(w, spec))

    coeffs = dwt_forward(img, spec).channels.sum(axis=0)
    f = side // g
    true_attr = (w * coeffs).reshape(g, f, g, f).sum(axis=(1, 3))
    attr = AttributionGrid(true_attr, FeatureSpace.WAVELET_CELLS, wavelet=spec)
    neg_attr = AttributionGrid(-true_attr, FeatureSpace.WAVELET_CELLS, wavelet=spec)

    pos = mu_fidelity(img, attr, scorer, 0, subset_size=4, n_subsets=100, seed=9)
    neg = mu_fidelity(img, neg_attr, scorer, 0, subset_size=4, n_subsets=100, seed=9)

    full_score = scorer.score_batch(img[None], 0)[0]
    zero_score = scorer.score_batch(np.zeros_like(img)[None], 0)[0]
    del_curve = deletion(img, attr, scorer, 0)
    ins_curve = insertion(img, attr, scorer, 0)
    endpoints_ok = (
        abs(del_curve.scores[0] - full_score) <= 1e-9
        and abs(ins_curve.scores[-1] - full_score) <= 1e-9
        and abs(del_curve.scores[-1] - zero_score) <= 1e-9
        and abs(ins_curve.scores[0] - zero_score) <= 1e-9
    )
    report(
        "mu-fidelity-identity",
        abs(pos.correlation - 1.0) <= 1e-9
        and abs(neg.correlation + 1.0) <= 1e-9
        and endpoints_ok,
        f"corr+={pos.correlation:.12f} corr-={neg.correlation:.12f}",
    )


def test_mass_conservation_on_random_maps():
    rng = np.random.default_rng(10)
    worst = 0.0
    for trial in range(100):
        levels = int(rng.integers(1, 4))
        g = (1 << levels) * int(rng.integers(1, 4))
        grid = rng.random((g, g))
        if trial % 4 == 0:
            grid = grid - 0.5  # signed estimator noise must conserve too
        wmap = WCAMap(
            total_indices=grid,
            first_order=grid.copy(),
            config=WcamConfig(grid_size=g, n_design=2,
                              wavelet=WaveletSpec(levels=levels)),
            target_class=0,
            n_forwards=0,
        )
        total = grid.sum()
        spatial_sum = spatial_project(wmap).grid.sum()
        embed_sum = scale_embed(wmap).z.sum()
        worst = max(worst, abs(spatial_sum - total), abs(embed_sum - total))
    report("mass-conservation", worst <= 1e-12, f"max_gap={worst:.2e}")


class _BlockSum(SyntheticModel):
    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=np.float64)

    def raw_scores(self, images):
        g = self.weights.shape[0]
        b, h, w, _ = images.shape
        blocks = images.sum(axis=3).reshape(b, g, h // g, g, w // g).sum(axis=(2, 4))
        return np.einsum("bij,ij->b", blocks, self.weights)


def test_metric_brute_force_orderings():
    weights = np.array([[0.9, 0.1], [0.5, 0.3]])
    scorer = SyntheticScorer(_BlockSum(weights))
    img = np.ones((4, 4, 1))
    attr = AttributionGrid(weights, FeatureSpace.PIXEL_CELLS)
    del_true = deletion(img, attr, scorer, 0).scores
    ins_true = insertion(img, attr, scorer, 0).scores
    ok = True
    for perm in permutations(range(4)):
        vals = np.empty(4)
        vals[list(perm)] = np.arange(4, 0, -1)
        p_attr = AttributionGrid(vals.reshape(2, 2), FeatureSpace.PIXEL_CELLS)
        ok &= bool(np.all(del_true <= deletion(img, p_attr, scorer, 0).scores + 1e-12))
        ok &= bool(np.all(ins_true >= insertion(img, p_attr, scorer, 0).scores - 1e-12))
    report("metric-brute-force", ok)


def test_sampler_study_auc_spread():
    rng = np.random.default_rng(12)
    side, g, levels = 16, 8, 2
    spec = WaveletSpec(levels=levels)
    img = rng.random((side, side, 1))
    scorer = SyntheticScorer(PixelRegionMean(region=(0, 0, 8, 8)), max_batch=4096)
    del_aucs, ins_aucs = [], []
    for sampler in Sampler:
        cfg = WcamConfig(grid_size=g, n_design=256, wavelet=spec,
                         sampler=SamplerKind(sampler, seed=13), batch_size=4096)
        wmap = compute_wcam(img, 0, scorer, cfg)
        attr = AttributionGrid(np.maximum(wmap.total_indices, 0.0),
                               FeatureSpace.WAVELET_CELLS, wavelet=spec)
        del_aucs.append(deletion(img, attr, scorer, 0, clamp=True).auc)
        ins_aucs.append(insertion(img, attr, scorer, 0, clamp=True).auc)
    del_spread = max(del_aucs) - min(del_aucs)
    ins_spread = max(ins_aucs) - min(ins_aucs)
    report(
        "sampler-study",
        del_spread <= 0.05 and ins_spread <= 0.05,
        f"del_spread={del_spread:.4f} ins_spread={ins_spread:.4f}",
    )
