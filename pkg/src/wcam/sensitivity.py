"""First-order and total Sobol index estimation from scored designs.

The pick-freeze estimator consumes the scores of the design rows A, B and
the column-pivoted rows C^(k):

    S_k   = (V - (1/2N) sum_j [f(B_j) - f(C_j^(k))]^2) / V
    S_T_k = (     (1/2N) sum_j [f(A_j) - f(C_j^(k))]^2) / V

with f_empty = mean(f(A)) and V the unbiased sample variance of f(A).
Negative estimates (possible at small N) are reported as-is; display-side
clipping is a rendering concern.

A constant scorer makes V collapse; below ``variance_floor`` the result is
flagged degenerate and all indices are reported as zero rather than NaN.

``sobol_hoeffding_check`` is the module's independent oracle: it decomposes
a function over uniform binary corners exhaustively into orthogonal
summands per subset of features, so partial variances can be compared
against estimator output without sampling error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from .errors import InvalidParamError, NonFiniteError, ShapeError

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class ScoredDesign:
    """Scores of the design rows: fA, fB length N; fC is K x N."""

    fA: np.ndarray
    fB: np.ndarray
    fC: np.ndarray

    def __post_init__(self):
        fa = np.asarray(self.fA, dtype=np.float64)
        fb = np.asarray(self.fB, dtype=np.float64)
        fc = np.asarray(self.fC, dtype=np.float64)
        object.__setattr__(self, "fA", fa)
        object.__setattr__(self, "fB", fb)
        object.__setattr__(self, "fC", fc)
        if fa.ndim != 1 or fb.shape != fa.shape:
            raise ShapeError("fA and fB must be equal-length vectors")
        if fc.ndim != 2 or fc.shape[1] != fa.shape[0]:
            raise ShapeError(
                f"fC must be K x N with N = {fa.shape[0]}, got {fc.shape}"
            )
        for name, arr in (("fA", fa), ("fB", fb), ("fC", fc)):
            if not np.isfinite(arr).all():
                raise NonFiniteError(f"{name} contains non-finite scores")

    @property
    def n_design(self) -> int:
        return self.fA.shape[0]

    @property
    def dim(self) -> int:
        return self.fC.shape[0]


@dataclass(frozen=True)
class SobolIndices:
    """Estimated indices plus the empirical mean/variance they divide by."""

    first_order: np.ndarray
    total: np.ndarray
    f_empty: float
    variance: float
    degenerate: bool = False


def jansen_estimate(scores: ScoredDesign, variance_floor: float = VARIANCE_FLOOR) -> SobolIndices:
    """Estimate first-order and total Sobol indices from design scores."""
    n = scores.n_design
    if n < 2:
        raise InvalidParamError(f"need at least 2 design rows, got {n}")
    fa, fb, fc = scores.fA, scores.fB, scores.fC

    f_empty = float(np.mean(fa))
    variance = float(np.sum((fa - f_empty) ** 2) / (n - 1))

    if variance <= variance_floor:
        zeros = np.zeros(scores.dim)
        return SobolIndices(zeros, zeros.copy(), f_empty, variance, degenerate=True)

    half = 0.5 / n
    first = (variance - half * np.sum((fb[None, :] - fc) ** 2, axis=1)) / variance
    total = half * np.sum((fa[None, :] - fc) ** 2, axis=1) / variance
    return SobolIndices(first, total, f_empty, variance)


@dataclass(frozen=True)
class DecompositionTable:
    """Exhaustive variance decomposition over uniform binary inputs."""

    dim: int
    total_variance: float
    partial_variance: dict[frozenset[int], float]
    first_order: np.ndarray = field(repr=False)
    total: np.ndarray = field(repr=False)

    def index(self, subset: frozenset[int]) -> float:
        if self.total_variance == 0.0:
            return 0.0
        return self.partial_variance[subset] / self.total_variance


def sobol_hoeffding_check(f: Callable[[np.ndarray], float], dim: int) -> DecompositionTable:
    """Decompose ``f`` over uniform {0,1}^dim corners into orthogonal summands.

    Returns the partial variance of every feature subset; their sum equals
    the total variance exactly (up to roundoff), which is the property
    tests assert.  Enumeration is guarded at dim <= 12.
    """
    if not 1 <= dim <= 12:
        raise InvalidParamError(f"dim must be in [1, 12], got {dim}")

    # Feature 0 is the most significant bit so that axis b of the reshaped
    # value tensor corresponds to feature b.
    corners = np.array(
        [[(i >> (dim - 1 - b)) & 1 for b in range(dim)] for i in range(1 << dim)],
        dtype=np.float64,
    )
    values = np.array([float(f(x)) for x in corners]).reshape((2,) * dim)

    all_axes = tuple(range(dim))
    mean = float(values.mean())
    total_var = float(((values - mean) ** 2).mean())

    # Conditional means E[f | X_subset], then a Moebius subtraction over the
    # subset lattice yields the orthogonal summands.
    effects: dict[frozenset[int], np.ndarray] = {frozenset(): np.array(mean)}
    partial: dict[frozenset[int], float] = {frozenset(): 0.0}
    subsets = [
        frozenset(c)
        for size in range(1, dim + 1)
        for c in combinations(range(dim), size)
    ]
    for subset in subsets:
        drop = tuple(ax for ax in all_axes if ax not in subset)
        cond = values.mean(axis=drop, keepdims=True)
        effect = cond.copy()
        for smaller, eff in effects.items():
            if smaller < subset:
                effect = effect - eff
        effects[subset] = effect
        partial[subset] = float((effect**2).mean())

    first = np.zeros(dim)
    total = np.zeros(dim)
    for subset, var in partial.items():
        for k in subset:
            total[k] += var
        if len(subset) == 1:
            (k,) = subset
            first[k] = var
    if total_var > 0:
        first /= total_var
        total /= total_var
    return DecompositionTable(dim, total_var, partial, first, total)
