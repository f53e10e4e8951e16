"""End-to-end map computation: design -> masks -> perturbed images -> indices.

A g x g mask multiplies the wavelet coefficient planes of the input image
(nearest-neighbor upsampled so cells never straddle subband borders, which
requires g divisible by 2**levels), the perturbed pyramid is inverted, and
the scorer evaluates the resulting images.  Scoring covers the design rows
A, every pivoted C^(k) and B, i.e. exactly N*(K+2) forwards for K = g*g.

Mask semantics: continuous multiplicative attenuation toward a zeroed
coefficient baseline; mask value 1 is the identity.  Thresholded binary
masks are available as an ablation.  Reconstructions are clamped to [0, 1]
before scoring by default; disable clamping when exact linearity in the
coefficients must hold (e.g. analytic oracles).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParamError, ShapeError
from .sampling import DesignMatrices, SamplerKind, draw_design, pivot_columns
from .scorers import ScorerHandle
from .sensitivity import ScoredDesign, jansen_estimate
from .wavelet import WaveletPyramid, WaveletSpec, dwt_forward, synthesize_planes

GRID_LEVELS_MESSAGE = "grid_size must be divisible by 2^levels"
IMAGE_GRID_MESSAGE = "image side must be divisible by grid_size"


@dataclass(frozen=True)
class WcamConfig:
    """Attribution run parameters; seed lives inside ``sampler``."""

    grid_size: int = 28
    n_design: int = 8
    sampler: SamplerKind = field(default_factory=SamplerKind)
    wavelet: WaveletSpec = field(default_factory=lambda: WaveletSpec(levels=2))
    batch_size: int = 64
    score_kind: str = "probability"
    clamp_output: bool = True
    binarize_masks: bool = False

    def __post_init__(self):
        if self.grid_size < 1:
            raise InvalidParamError(f"grid_size must be positive, got {self.grid_size}")
        if self.n_design < 2:
            raise InvalidParamError(f"n_design must be >= 2, got {self.n_design}")
        if self.batch_size < 1:
            raise InvalidParamError(f"batch_size must be positive, got {self.batch_size}")
        if self.grid_size % (1 << self.wavelet.levels):
            raise InvalidParamError(GRID_LEVELS_MESSAGE)

    @property
    def dim(self) -> int:
        return self.grid_size * self.grid_size

    @property
    def n_forwards(self) -> int:
        return self.n_design * (self.dim + 2)


@dataclass
class MaskBatch:
    """Masks plus the provenance (A, B or C^(k)) of each row.

    Canonical row order: the N rows of A, the N rows of B, then the N rows
    of C^(k) for k ascending; ``k_index`` is -1 outside the C block.
    """

    masks: np.ndarray
    provenance: np.ndarray
    k_index: np.ndarray
    n_design: int
    grid_size: int

    def __len__(self) -> int:
        return self.masks.shape[0]

    @property
    def a_slice(self) -> slice:
        return slice(0, self.n_design)

    @property
    def b_slice(self) -> slice:
        return slice(self.n_design, 2 * self.n_design)

    def c_slice(self, k: int) -> slice:
        start = (2 + k) * self.n_design
        return slice(start, start + self.n_design)


@dataclass
class WCAMap:
    """Grid of estimated Sobol indices over the wavelet plane."""

    total_indices: np.ndarray
    first_order: np.ndarray
    config: WcamConfig
    target_class: int
    n_forwards: int
    f_empty: float = 0.0
    variance: float = 0.0
    degenerate: bool = False

    @property
    def grid_size(self) -> int:
        return self.total_indices.shape[0]

    @property
    def levels(self) -> int:
        return self.config.wavelet.levels


def design_to_masks(rows: np.ndarray, grid_size: int,
                    provenance: str = "A", k_index: int = -1) -> MaskBatch:
    """Row-major reshape of N x K design rows to N masks of g x g."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    n, k = rows.shape
    if k != grid_size * grid_size:
        raise ShapeError(
            f"design dimension {k} does not match grid {grid_size}x{grid_size}"
        )
    masks = rows.reshape(n, grid_size, grid_size)
    return MaskBatch(
        masks=masks,
        provenance=np.full(n, provenance),
        k_index=np.full(n, k_index, dtype=int),
        n_design=n,
        grid_size=grid_size,
    )


def full_mask_batch(design: DesignMatrices, grid_size: int,
                    binarize: bool = False) -> MaskBatch:
    """Assemble the N*(K+2) masks for A, B and every pivoted C^(k)."""
    k_dim = design.dim
    if k_dim != grid_size * grid_size:
        raise ShapeError(
            f"design dimension {k_dim} does not match grid {grid_size}x{grid_size}"
        )
    n = design.n_design
    rows = np.concatenate(
        [design.A, design.B]
        + [pivot_columns(design, k) for k in range(k_dim)],
        axis=0,
    )
    if binarize:
        rows = (rows > 0.5).astype(np.float64)
    masks = rows.reshape(-1, grid_size, grid_size)
    provenance = np.concatenate(
        [np.full(n, "A"), np.full(n, "B"), np.full(n * k_dim, "C")]
    )
    k_index = np.concatenate(
        [np.full(2 * n, -1, dtype=int), np.repeat(np.arange(k_dim), n)]
    )
    return MaskBatch(masks, provenance, k_index, n, grid_size)


def upsample_masks(masks: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbor upsample of (..., g, g) masks to (..., H, W)."""
    g_rows, g_cols = masks.shape[-2], masks.shape[-1]
    if height % g_rows or width % g_cols:
        raise ShapeError(IMAGE_GRID_MESSAGE)
    out = np.repeat(masks, height // g_rows, axis=-2)
    return np.repeat(out, width // g_cols, axis=-1)


def apply_mask(pyramid: WaveletPyramid, mask: np.ndarray) -> WaveletPyramid:
    """Multiply one upsampled mask into every channel's coefficient plane."""
    h, w, _ = pyramid.original_shape
    up = upsample_masks(np.asarray(mask, dtype=np.float64), h, w)
    return WaveletPyramid(pyramid.channels * up[None, :, :], pyramid.spec,
                          pyramid.original_shape)


def perturb_batch(pyramid: WaveletPyramid, masks: np.ndarray,
                  clamp: bool = True) -> np.ndarray:
    """Masked reconstructions for a stack of masks; returns (B, H, W, C)."""
    h, w, _ = pyramid.original_shape
    up = upsample_masks(np.asarray(masks, dtype=np.float64), h, w)
    perturbed = pyramid.channels[None, :, :, :] * up[:, None, :, :]
    planes = synthesize_planes(perturbed, pyramid.spec, copy=False)
    if clamp:
        np.clip(planes, 0.0, 1.0, out=planes)
    return np.moveaxis(planes, 1, -1)


def compute_wcam(image: np.ndarray, target_class: int, scorer: ScorerHandle,
                 config: WcamConfig) -> WCAMap:
    """Run the full attribution: returns the g x g index map.

    Deterministic for a fixed (image, config, seed, scorer); scores are
    reassembled by design-row index, never by arrival order.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    h, w = arr.shape[0], arr.shape[1]
    if h % config.grid_size or w % config.grid_size:
        raise InvalidParamError(IMAGE_GRID_MESSAGE)
    pyramid = dwt_forward(arr, config.wavelet)

    design = draw_design(config.sampler, config.n_design, config.dim)
    batch = full_mask_batch(design, config.grid_size, binarize=config.binarize_masks)

    scores = np.empty(len(batch), dtype=np.float64)
    chunk = min(config.batch_size, scorer.max_batch)
    for start in range(0, len(batch), chunk):
        stop = min(start + chunk, len(batch))
        images = perturb_batch(pyramid, batch.masks[start:stop], clamp=config.clamp_output)
        out = np.asarray(scorer.score_batch(images, target_class), dtype=np.float64)
        if out.shape != (stop - start,):
            raise ShapeError(
                f"scorer returned {out.shape} scores for a batch of {stop - start}"
            )
        scores[start:stop] = out

    n, k_dim = config.n_design, config.dim
    scored = ScoredDesign(
        fA=scores[batch.a_slice],
        fB=scores[batch.b_slice],
        fC=scores[2 * n:].reshape(k_dim, n),
    )
    estimate = jansen_estimate(scored)
    g = config.grid_size
    return WCAMap(
        total_indices=estimate.total.reshape(g, g),
        first_order=estimate.first_order.reshape(g, g),
        config=config,
        target_class=target_class,
        n_forwards=len(batch),
        f_empty=estimate.f_empty,
        variance=estimate.variance,
        degenerate=estimate.degenerate,
    )
