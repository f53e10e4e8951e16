"""Multilevel 2D discrete wavelet transform with an exact inverse.

Coefficients are stored in a nested, image-sized layout per channel: the
approximation block sits at the top-left, and the three detail blocks of
level ``j`` complete the square of side ``H / 2**(j-1)``.  Level 1 holds the
finest details, level ``levels`` the coarsest.  Within one level the blocks
are placed as::

    +---------+---------+
    |  approx |    h    |      h: horizontal details (vertical high-pass,
    | / finer |         |         captures horizontal edges)
    +---------+---------+      v: vertical details (horizontal high-pass)
    |    v    |    d    |      d: diagonal details (high-pass both ways)
    +---------+---------+

Both supported families are orthonormal, so the synthesis transform is the
exact transpose of the analysis transform and coefficient energy equals
pixel energy.  Boundaries are handled by periodic extension, which keeps
every level an exact half-size of the previous one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSubbandError, NonFiniteError, ShapeError

_SQRT2 = np.sqrt(2.0)
_SQRT3 = np.sqrt(3.0)


class WaveletFamily(str, enum.Enum):
    HAAR = "haar"
    # 4-tap orthonormal Daubechies filter (two vanishing moments, often
    # written D4): this is the shortest Daubechies filter beyond Haar.
    DAUBECHIES4 = "db4"


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"


class Orientation(str, enum.Enum):
    APPROX = "a"
    HORIZONTAL = "h"
    VERTICAL = "v"
    DIAGONAL = "d"


# Analysis low-pass filters; the high-pass is the quadrature mirror
# g[k] = (-1)^k * h[L-1-k].
_LOWPASS = {
    WaveletFamily.HAAR: np.array([1.0, 1.0]) / _SQRT2,
    WaveletFamily.DAUBECHIES4: np.array(
        [1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]
    )
    / (4.0 * _SQRT2),
}


def filter_pair(family: WaveletFamily) -> tuple[np.ndarray, np.ndarray]:
    """Return the orthonormal (low-pass, high-pass) analysis pair."""
    lo = _LOWPASS[WaveletFamily(family)]
    hi = (lo[::-1] * np.power(-1.0, np.arange(lo.size)))
    return lo, hi


@dataclass(frozen=True)
class WaveletSpec:
    """Transform configuration: family, decomposition depth, boundary rule."""

    family: WaveletFamily = WaveletFamily.HAAR
    levels: int = 1
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if self.levels < 1:
            raise ShapeError(f"levels must be >= 1, got {self.levels}")

    def validate_shape(self, height: int, width: int) -> None:
        div = 1 << self.levels
        if height % div or width % div:
            raise ShapeError(
                f"image shape {height}x{width} not divisible by 2^levels = {div}"
            )


@dataclass(frozen=True)
class SubbandId:
    """One subband: ``level`` 0 is the approximation, 1 the finest details."""

    level: int
    orientation: Orientation

    def __post_init__(self):
        if (self.level == 0) != (self.orientation == Orientation.APPROX):
            raise InvalidSubbandError(
                "orientation must be APPROX exactly when level is 0"
            )
        if self.level < 0:
            raise InvalidSubbandError(f"negative level {self.level}")

    @property
    def label(self) -> str:
        if self.orientation == Orientation.APPROX:
            return "a"
        return f"{self.orientation.value}{self.level}"


@dataclass
class WaveletPyramid:
    """Per-channel nested coefficient planes of shape (C, H, W)."""

    channels: np.ndarray
    spec: WaveletSpec
    original_shape: tuple[int, int, int]

    def copy(self) -> "WaveletPyramid":
        return WaveletPyramid(self.channels.copy(), self.spec, self.original_shape)


def _roll(x: np.ndarray, shift: int, axis: int) -> np.ndarray:
    if shift % x.shape[axis] == 0:
        return x
    return np.roll(x, shift, axis=axis)


def _analyze_axis(x: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                  axis: int) -> tuple[np.ndarray, np.ndarray]:
    # Periodized single-level split along ``axis`` (-1 or -2):
    #   s[n] = sum_k lo[k] * x[(2n + k) mod N],  d[n] likewise with hi.
    even_ix = (Ellipsis, slice(0, None, 2)) if axis == -1 else (Ellipsis, slice(0, None, 2), slice(None))
    odd_ix = (Ellipsis, slice(1, None, 2)) if axis == -1 else (Ellipsis, slice(1, None, 2), slice(None))
    even = x[even_ix]
    odd = x[odd_ix]
    s = d = None
    for k in range(lo.size):
        half = even if k % 2 == 0 else odd
        shifted = _roll(half, -(k // 2), axis)
        if s is None:
            s = lo[k] * shifted
            d = hi[k] * shifted
        else:
            s += lo[k] * shifted
            d += hi[k] * shifted
    return s, d


def _synthesize_axis(s: np.ndarray, d: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                     axis: int) -> np.ndarray:
    # Transpose of _analyze_axis: out[(2n + k) mod N] += lo[k]*s[n] + hi[k]*d[n].
    shape = list(s.shape)
    shape[axis] *= 2
    out = np.empty(shape, dtype=np.result_type(np.float64, s, d))
    even_ix = (Ellipsis, slice(0, None, 2)) if axis == -1 else (Ellipsis, slice(0, None, 2), slice(None))
    odd_ix = (Ellipsis, slice(1, None, 2)) if axis == -1 else (Ellipsis, slice(1, None, 2), slice(None))
    # Taps 0 and 1 land unshifted: write straight into the interleaved
    # views; longer filters accumulate their rolled contributions on top.
    even = out[even_ix]
    odd = out[odd_ix]
    np.multiply(s, lo[0], out=even)
    even += hi[0] * d
    np.multiply(s, lo[1], out=odd)
    odd += hi[1] * d
    for k in range(2, lo.size):
        contrib = lo[k] * s
        contrib += hi[k] * d
        target = even if k % 2 == 0 else odd
        target += _roll(contrib, k // 2, axis)
    return out


def _analyze2d(x: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """One 2D level on the trailing two axes; returns (a, h, v, d)."""
    lo_c, hi_c = _analyze_axis(x, lo, hi, axis=-1)   # along each row
    a, h = _analyze_axis(lo_c, lo, hi, axis=-2)      # along each column
    v, d = _analyze_axis(hi_c, lo, hi, axis=-2)
    return a, h, v, d


def _synthesize2d(a: np.ndarray, h: np.ndarray, v: np.ndarray, d: np.ndarray,
                  lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    lo_c = _synthesize_axis(a, h, lo, hi, axis=-2)
    hi_c = _synthesize_axis(v, d, lo, hi, axis=-2)
    return _synthesize_axis(lo_c, hi_c, lo, hi, axis=-1)


def analyze_planes(planes: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    """Forward transform of (..., H, W) planes into nested layout."""
    lo, hi = filter_pair(spec.family)
    out = np.array(planes, dtype=np.float64)
    h, w = out.shape[-2], out.shape[-1]
    spec.validate_shape(h, w)
    for j in range(spec.levels):
        hj, wj = h >> j, w >> j
        block = out[..., :hj, :wj]
        a, hh, vv, dd = _analyze2d(block, lo, hi)
        h2, w2 = hj // 2, wj // 2
        block[..., :h2, :w2] = a
        block[..., :h2, w2:] = hh
        block[..., h2:, :w2] = vv
        block[..., h2:, w2:] = dd
    return out


def synthesize_planes(coeffs: np.ndarray, spec: WaveletSpec, copy: bool = True) -> np.ndarray:
    """Inverse of :func:`analyze_planes` on (..., H, W) nested planes.

    ``copy=False`` reconstructs in place when the caller owns the buffer.
    """
    lo, hi = filter_pair(spec.family)
    out = np.array(coeffs, dtype=np.float64, copy=copy or None)
    if out.dtype != np.float64 or not out.flags.writeable:
        out = out.astype(np.float64)
    h, w = out.shape[-2], out.shape[-1]
    spec.validate_shape(h, w)
    for j in reversed(range(spec.levels)):
        hj, wj = h >> j, w >> j
        h2, w2 = hj // 2, wj // 2
        block = out[..., :hj, :wj]
        rec = _synthesize2d(
            block[..., :h2, :w2],
            block[..., :h2, w2:],
            block[..., h2:, :w2],
            block[..., h2:, w2:],
            lo,
            hi,
        )
        out[..., :hj, :wj] = rec
    return out


def _as_hwc(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ShapeError(f"expected HxW or HxWxC image, got shape {arr.shape}")
    return arr


def dwt_forward(image: np.ndarray, spec: WaveletSpec) -> WaveletPyramid:
    """Channel-wise multilevel DWT of an (H, W, C) image.

    Raises ShapeError when H or W is not divisible by 2**levels and
    NonFiniteError on NaN/Inf input.
    """
    arr = _as_hwc(image)
    if not np.isfinite(arr).all():
        raise NonFiniteError("image contains NaN or Inf")
    h, w, c = arr.shape
    spec.validate_shape(h, w)
    coeffs = analyze_planes(np.moveaxis(arr, -1, 0), spec)
    return WaveletPyramid(coeffs, spec, (h, w, c))


def dwt_inverse(pyramid: WaveletPyramid) -> np.ndarray:
    """Exact synthesis inverse; output is (H, W, C) and is not clamped."""
    coeffs = np.asarray(pyramid.channels, dtype=np.float64)
    if coeffs.ndim != 3:
        raise ShapeError(f"pyramid channels must be (C, H, W), got {coeffs.shape}")
    h, w, c = pyramid.original_shape
    if coeffs.shape != (c, h, w):
        raise ShapeError(
            f"pyramid layout {coeffs.shape} inconsistent with original shape {(c, h, w)}"
        )
    planes = synthesize_planes(coeffs, pyramid.spec)
    return np.moveaxis(planes, 0, -1)


def subband_region(
    spec: WaveletSpec, shape: tuple[int, int], band: SubbandId
) -> tuple[int, int, int, int]:
    """Half-open (row0, col0, row1, col1) rectangle of a subband.

    The 3*levels + 1 rectangles tile the plane disjointly.
    """
    h, w = shape
    spec.validate_shape(h, w)
    if band.level > spec.levels:
        raise InvalidSubbandError(
            f"level {band.level} exceeds decomposition depth {spec.levels}"
        )
    if band.orientation == Orientation.APPROX:
        return (0, 0, h >> spec.levels, w >> spec.levels)
    bh, bw = h >> band.level, w >> band.level
    if band.orientation == Orientation.HORIZONTAL:
        return (0, bw, bh, 2 * bw)
    if band.orientation == Orientation.VERTICAL:
        return (bh, 0, 2 * bh, bw)
    return (bh, bw, 2 * bh, 2 * bw)


def subband_order(levels: int) -> list[SubbandId]:
    """Canonical coarse-to-fine subband ordering: a, then h/v/d per level."""
    bands = [SubbandId(0, Orientation.APPROX)]
    for level in range(levels, 0, -1):
        for ori in (Orientation.HORIZONTAL, Orientation.VERTICAL, Orientation.DIAGONAL):
            bands.append(SubbandId(level, ori))
    return bands
