"""Quantities derived from an attribution map.

* spatial projection: sums spatially aligned cells across subbands, after
  pooling finer blocks down to the approximation resolution, so the total
  mass is conserved exactly;
* scale embeddings: per-subband aggregates ordered coarse to fine
  (approximation first), length 1 + 3 * levels;
* frequency curves: normalized per-subband importance and its cumulative
  sum along the coarse-to-fine ordering;
* embedding distances and batch consistency against a resampling-noise
  baseline;
* reconstructions that keep only the top-ranked coefficient groups, and
  the smallest such reconstruction a classifier still assigns the target
  class.

Negative estimated indices (estimator noise) are preserved in embeddings
so mass bookkeeping stays exact; they are floored at zero where an
ordering or a normalized curve is required, and the floor count is
reported.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParamError, ShapeError
from .pipeline import WCAMap, WcamConfig, compute_wcam, upsample_masks
from .scorers import ScorerHandle
from .wavelet import (
    SubbandId,
    WaveletSpec,
    dwt_forward,
    subband_order,
    subband_region,
    synthesize_planes,
)


class Normalization(str, enum.Enum):
    RAW_SUM = "raw_sum"
    MEAN_PER_CELL = "mean_per_cell"


@dataclass
class SpatialWCAM:
    """Importance summed across subbands at aligned spatial positions."""

    grid: np.ndarray
    source: WCAMap


@dataclass
class ScaleEmbedding:
    """Vector of per-subband aggregated importance, coarse to fine."""

    z: np.ndarray
    bands: list[SubbandId]
    normalization: Normalization

    @property
    def labels(self) -> list[str]:
        return [b.label for b in self.bands]


@dataclass
class FrequencyCurve:
    normalized: np.ndarray
    cumulative: np.ndarray
    labels: list[str]
    floored: int = 0
    degenerate: bool = False


def _grid_levels(wcam: WCAMap) -> tuple[np.ndarray, int, WaveletSpec]:
    grid = np.asarray(wcam.total_indices, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise ShapeError(f"expected a square index grid, got {grid.shape}")
    return grid, wcam.levels, wcam.config.wavelet


def spatial_project(wcam: WCAMap) -> SpatialWCAM:
    """Project the map onto pixel-space positions.

    Each finer subband block is sum-pooled down to the approximation
    block's resolution before the blocks are added, so
    sum(spatial) == sum(map) exactly.
    """
    grid, levels, spec = _grid_levels(wcam)
    g = grid.shape[0]
    if g % (1 << levels):
        raise ShapeError(f"grid {g} not divisible by 2^levels = {1 << levels}")
    side = g >> levels
    out = np.zeros((side, side))
    for band in subband_order(levels):
        r0, c0, r1, c1 = subband_region(spec, (g, g), band)
        block = grid[r0:r1, c0:c1]
        factor = block.shape[0] // side
        pooled = block.reshape(side, factor, side, factor).sum(axis=(1, 3))
        out += pooled
    return SpatialWCAM(grid=out, source=wcam)


def scale_embed(wcam: WCAMap,
                normalization: Normalization = Normalization.RAW_SUM) -> ScaleEmbedding:
    """Aggregate the map per subband; RAW_SUM conserves total mass."""
    grid, levels, spec = _grid_levels(wcam)
    g = grid.shape[0]
    bands = subband_order(levels)
    z = np.empty(len(bands))
    for i, band in enumerate(bands):
        r0, c0, r1, c1 = subband_region(spec, (g, g), band)
        block = grid[r0:r1, c0:c1]
        total = block.sum()
        if normalization == Normalization.MEAN_PER_CELL:
            total /= block.size
        z[i] = total
    return ScaleEmbedding(z=z, bands=bands, normalization=normalization)


def frequency_curve(embedding: ScaleEmbedding) -> FrequencyCurve:
    """Normalize to unit sum and accumulate along coarse-to-fine order."""
    z = np.asarray(embedding.z, dtype=np.float64)
    floored = int(np.sum(z < 0))
    z = np.maximum(z, 0.0)
    total = z.sum()
    if total <= 0.0:
        zeros = np.zeros_like(z)
        return FrequencyCurve(zeros, zeros.copy(), embedding.labels,
                              floored=floored, degenerate=True)
    normalized = z / total
    return FrequencyCurve(
        normalized=normalized,
        cumulative=np.cumsum(normalized),
        labels=embedding.labels,
        floored=floored,
    )


def embedding_distance(z_i, z_j) -> float:
    """Euclidean distance between two scale embeddings."""
    a = np.asarray(getattr(z_i, "z", z_i), dtype=np.float64)
    b = np.asarray(getattr(z_j, "z", z_j), dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"embedding lengths differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def pairwise_distances(embeddings) -> np.ndarray:
    """Distances over all unordered pairs, in lexicographic (i, j) order."""
    vecs = [np.asarray(getattr(e, "z", e), dtype=np.float64) for e in embeddings]
    if len(vecs) < 2:
        raise InvalidParamError("need at least two embeddings")
    out = []
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs)):
            out.append(embedding_distance(vecs[i], vecs[j]))
    return np.asarray(out)


@dataclass
class ConsistencyResult:
    mean_distance: float
    distances: np.ndarray
    baseline_mean: float
    baseline_distances: np.ndarray

    def baseline_interval(self, z: float = 1.96) -> tuple[float, float]:
        """Normal-approximation confidence interval of the baseline mean."""
        d = self.baseline_distances
        half = z * d.std(ddof=1) / np.sqrt(d.size) if d.size > 1 else 0.0
        return (self.baseline_mean - half, self.baseline_mean + half)


def noise_baseline_embeddings(image, target_class: int, scorer: ScorerHandle,
                              config: WcamConfig, repeats: int = 20,
                              normalization: Normalization = Normalization.RAW_SUM,
                              ) -> list[ScaleEmbedding]:
    """Embeddings of one fixed image under ``repeats`` different design seeds.

    Their spread is the background noise of the sampling process itself.
    """
    if repeats < 2:
        raise InvalidParamError("need at least two repeats for a baseline")
    out = []
    for r in range(repeats):
        sampler = replace(config.sampler, seed=config.sampler.seed + 1 + r)
        cfg = replace(config, sampler=sampler)
        out.append(scale_embed(compute_wcam(image, target_class, scorer, cfg),
                               normalization))
    return out


def batch_consistency(embeddings, baseline_embeddings) -> ConsistencyResult:
    """Mean pairwise distance of a batch next to the sampling-noise baseline."""
    distances = pairwise_distances(embeddings)
    baseline = pairwise_distances(baseline_embeddings)
    return ConsistencyResult(
        mean_distance=float(distances.mean()),
        distances=distances,
        baseline_mean=float(baseline.mean()),
        baseline_distances=baseline,
    )


# --- reconstruction from top-ranked coefficient groups ---------------------


def rank_cells(wcam: WCAMap) -> np.ndarray:
    """Flat cell indices by descending total index.

    Negative estimates are floored for ranking purposes; ties (including
    everything floored to zero) break by ascending flat index.
    """
    grid, _, _ = _grid_levels(wcam)
    flat = np.maximum(grid.ravel(), 0.0)
    order = np.lexsort((np.arange(flat.size), -flat))
    return order


def reconstruct_topk(image, wcam: WCAMap, k: int) -> np.ndarray:
    """Keep the coefficient groups of the top-k cells, zero the rest, invert."""
    grid, _, spec = _grid_levels(wcam)
    g = grid.shape[0]
    if not 0 <= k <= g * g:
        raise InvalidParamError(f"k must be in [0, {g * g}], got {k}")
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    keep = np.zeros(g * g)
    keep[rank_cells(wcam)[:k]] = 1.0
    pyramid = dwt_forward(arr, spec)
    up = upsample_masks(keep.reshape(g, g), arr.shape[0], arr.shape[1])
    planes = synthesize_planes(pyramid.channels * up[None, :, :], spec)
    return np.clip(np.moveaxis(planes, 0, -1), 0.0, 1.0)


@dataclass
class MinimalImageResult:
    """Outcome of the sufficient-reconstruction search.

    ``sufficient`` is False when no k <= K yields the target class; that is
    an explicit outcome, not an error.
    """

    sufficient: bool
    k: int | None
    image: np.ndarray | None
    class_scores: np.ndarray | None = None


def minimal_image(image, wcam: WCAMap, scorer: ScorerHandle,
                  target_class: int) -> MinimalImageResult:
    """Smallest top-k reconstruction the scorer assigns the target class.

    Scans k = 1..K linearly: sufficiency need not be monotone in k for an
    arbitrary scorer, so a bisection would be unsound.  Requires a scorer
    that reports all-class scores.
    """
    if not scorer.supports_all_scores:
        raise InvalidParamError("minimal_image needs a scorer with all-class scores")
    grid, _, _ = _grid_levels(wcam)
    k_max = grid.size
    chunk = max(1, min(scorer.max_batch, 16))
    k = 1
    while k <= k_max:
        ks = list(range(k, min(k + chunk, k_max + 1)))
        batch = np.stack([reconstruct_topk(image, wcam, kk) for kk in ks])
        all_scores = np.asarray(scorer.score_all_batch(batch))
        for kk, row in zip(ks, all_scores):
            if int(np.argmax(row)) == int(target_class):
                return MinimalImageResult(True, kk, batch[kk - ks[0]], row)
        k = ks[-1] + 1
    return MinimalImageResult(False, None, None)
