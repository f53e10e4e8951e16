"""Faithfulness metrics for attribution grids: deletion, insertion, fidelity.

Removal is materialized per feature space: a wavelet cell is zeroed in the
coefficient plane before inverting, a pixel cell is set to the baseline
value directly.  The baseline is 0 in both spaces.  Materialized images
are not clamped by default so that the algebraic identities of linear
scorers hold exactly; pass ``clamp=True`` when feeding scorers that
require valid [0, 1] inputs.

Deletion tracks the score while the top-ranked features are progressively
set to the baseline (lower area is better); insertion starts from the
all-baseline input and restores features (higher is better).  Fidelity is
the Pearson correlation between the attributed mass of random feature
subsets and the score drop when those subsets are set to the baseline.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParamError, ShapeError
from .pipeline import upsample_masks
from .scorers import ScorerHandle
from .wavelet import WaveletSpec, dwt_forward, synthesize_planes


class FeatureSpace(str, enum.Enum):
    WAVELET_CELLS = "wavelet"
    PIXEL_CELLS = "pixel"


@dataclass
class AttributionGrid:
    """g x g importance over features of the chosen space."""

    importance: np.ndarray
    feature_space: FeatureSpace = FeatureSpace.WAVELET_CELLS
    baseline: float = 0.0
    wavelet: WaveletSpec = field(default_factory=lambda: WaveletSpec(levels=2))

    def __post_init__(self):
        imp = np.asarray(self.importance, dtype=np.float64)
        if imp.ndim != 2 or imp.shape[0] != imp.shape[1]:
            raise ShapeError(f"importance must be a square grid, got {imp.shape}")
        if not np.isfinite(imp).all():
            raise ShapeError("importance contains non-finite entries")
        self.importance = imp

    @property
    def grid_size(self) -> int:
        return self.importance.shape[0]

    @property
    def dim(self) -> int:
        return self.importance.size

    def ranking(self) -> np.ndarray:
        """Flat feature indices by descending importance, ties by flat index."""
        flat = self.importance.ravel()
        return np.lexsort((np.arange(flat.size), -flat))


@dataclass
class CurveResult:
    """Scores along the removal/insertion trajectory plus normalized AUC."""

    scores: np.ndarray
    counts: np.ndarray
    auc: float


class _Materializer:
    """Builds the image with a given feature subset at the baseline."""

    def __init__(self, image, attr: AttributionGrid, clamp: bool):
        arr = np.asarray(image, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        self.image = arr
        self.attr = attr
        self.clamp = clamp
        g = attr.grid_size
        if arr.shape[0] % g or arr.shape[1] % g:
            raise ShapeError(
                f"image sides {arr.shape[:2]} not divisible by grid {g}"
            )
        if attr.feature_space == FeatureSpace.WAVELET_CELLS:
            self.pyramid = dwt_forward(arr, attr.wavelet)

    def with_baseline(self, feature_sets: list[np.ndarray]) -> np.ndarray:
        """One image per feature set with those features at the baseline."""
        g = self.attr.grid_size
        h, w = self.image.shape[0], self.image.shape[1]
        masks = np.ones((len(feature_sets), g * g))
        for i, subset in enumerate(feature_sets):
            masks[i, np.asarray(subset, dtype=int)] = 0.0
        masks = masks.reshape(-1, g, g)
        if self.attr.feature_space == FeatureSpace.WAVELET_CELLS:
            up = upsample_masks(masks, h, w)
            coeffs = self.pyramid.channels[None] * up[:, None]
            if self.attr.baseline != 0.0:
                coeffs = coeffs + self.attr.baseline * (1.0 - up[:, None])
            planes = synthesize_planes(coeffs, self.attr.wavelet)
            out = np.moveaxis(planes, 1, -1)
        else:
            up = upsample_masks(masks, h, w)
            out = self.image[None] * up[..., None]
            if self.attr.baseline != 0.0:
                out = out + self.attr.baseline * (1.0 - up[..., None])
        if self.clamp:
            np.clip(out, 0.0, 1.0, out=out)
        return out


def _score_rows(scorer: ScorerHandle, images: np.ndarray, target_class: int) -> np.ndarray:
    out = np.empty(images.shape[0])
    step = scorer.max_batch
    for start in range(0, images.shape[0], step):
        stop = min(start + step, images.shape[0])
        out[start:stop] = np.asarray(
            scorer.score_batch(images[start:stop], target_class), dtype=np.float64
        )
    return out


def _step_counts(dim: int, steps: int) -> np.ndarray:
    counts = np.round(np.linspace(0, dim, steps + 1)).astype(int)
    counts[0], counts[-1] = 0, dim
    return counts


def _trajectory(image, attr, scorer, target_class, steps, insert: bool,
                clamp: bool) -> CurveResult:
    if steps < 1 or steps > attr.dim:
        raise InvalidParamError(f"steps must be in [1, {attr.dim}], got {steps}")
    mat = _Materializer(image, attr, clamp)
    order = attr.ranking()
    counts = _step_counts(attr.dim, steps)
    subsets = []
    for t in counts:
        removed = order[t:] if insert else order[:t]
        subsets.append(removed)
    images = mat.with_baseline(subsets)
    scores = _score_rows(scorer, images, target_class)
    auc = float(np.trapezoid(scores, dx=1.0 / steps))
    return CurveResult(scores=scores, counts=counts, auc=auc)


def deletion(image, attr: AttributionGrid, scorer: ScorerHandle, target_class: int,
             steps: int | None = None, clamp: bool = False) -> CurveResult:
    """Score trajectory as the top-t features are set to the baseline."""
    steps = attr.dim if steps is None else steps
    return _trajectory(image, attr, scorer, target_class, steps, insert=False,
                       clamp=clamp)


def insertion(image, attr: AttributionGrid, scorer: ScorerHandle, target_class: int,
              steps: int | None = None, clamp: bool = False) -> CurveResult:
    """Score trajectory as the top-t features are restored into the baseline."""
    steps = attr.dim if steps is None else steps
    return _trajectory(image, attr, scorer, target_class, steps, insert=True,
                       clamp=clamp)


@dataclass
class FidelityResult:
    correlation: float
    degenerate: bool = False
    subset_size: int = 0
    n_subsets: int = 0


def mu_fidelity(image, attr: AttributionGrid, scorer: ScorerHandle, target_class: int,
                subset_size: int | None = None, n_subsets: int = 200,
                seed: int = 0, clamp: bool = False) -> FidelityResult:
    """Correlation between attributed subset mass and the score drop.

    Subsets of ``subset_size`` features (default K/8, at least 1) are drawn
    uniformly without replacement, independently across the ``n_subsets``
    draws; the draw is fully determined by ``seed``.
    """
    dim = attr.dim
    d = max(1, dim // 8) if subset_size is None else subset_size
    if not 1 <= d <= dim:
        raise InvalidParamError(f"subset_size must be in [1, {dim}], got {d}")
    if n_subsets < 2:
        raise InvalidParamError(f"n_subsets must be >= 2, got {n_subsets}")

    rng = np.random.default_rng(seed)
    subsets = [rng.choice(dim, size=d, replace=False) for _ in range(n_subsets)]

    mat = _Materializer(image, attr, clamp)
    base_score = _score_rows(scorer, mat.with_baseline([np.empty(0, dtype=int)]),
                             target_class)[0]
    perturbed = mat.with_baseline(subsets)
    drops = base_score - _score_rows(scorer, perturbed, target_class)
    attributed = np.array([attr.importance.ravel()[u].sum() for u in subsets])

    if np.std(drops) == 0.0 or np.std(attributed) == 0.0:
        return FidelityResult(0.0, degenerate=True, subset_size=d, n_subsets=n_subsets)
    corr = float(np.corrcoef(attributed, drops)[0, 1])
    return FidelityResult(corr, subset_size=d, n_subsets=n_subsets)
