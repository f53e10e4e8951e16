"""Low-discrepancy and pseudo-random design generators.

A design is a pair of independent N x K matrices (A, B) with entries in
[0, 1], plus the column-pivoted variants C^(k) equal to A except that
column k is taken from B.  Independence of A and B is obtained by drawing
2K-dimensional points and splitting the columns, so one generator state
covers both halves.

The scrambled Sobol' generator uses scipy's implementation (Joe-Kuo 2008
direction numbers, Owen-style scrambling keyed by the seed); Halton is
scrambled the same way, and the Latin hypercube and plain Monte Carlo
generators are seeded through numpy Generators.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import InvalidParamError


class Sampler(str, enum.Enum):
    SOBOL = "sobol"
    HALTON = "halton"
    LATIN_HYPERCUBE = "lhs"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class SamplerKind:
    """Sampler family plus the seed that fixes every downstream mask."""

    kind: Sampler = Sampler.SOBOL
    seed: int = 0


@dataclass(frozen=True)
class DesignMatrices:
    """Independent N x K matrices A and B with entries in [0, 1]."""

    A: np.ndarray
    B: np.ndarray

    @property
    def n_design(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]


def draw_design(kind: SamplerKind, n_design: int, dim: int) -> DesignMatrices:
    """Draw the (A, B) pair for ``n_design`` rows of dimension ``dim``."""
    if n_design < 2:
        raise InvalidParamError(f"n_design must be >= 2, got {n_design}")
    if dim < 1:
        raise InvalidParamError(f"dim must be >= 1, got {dim}")

    d2 = 2 * dim
    if kind.kind == Sampler.SOBOL:
        engine = qmc.Sobol(d=d2, scramble=True, seed=kind.seed)
        with warnings.catch_warnings():
            # scipy warns when n is not a power of two; balance loss is
            # acceptable here and the draw stays deterministic.
            warnings.simplefilter("ignore", UserWarning)
            points = engine.random(n_design)
    elif kind.kind == Sampler.HALTON:
        engine = qmc.Halton(d=d2, scramble=True, seed=kind.seed)
        points = engine.random(n_design)
    elif kind.kind == Sampler.LATIN_HYPERCUBE:
        engine = qmc.LatinHypercube(d=d2, seed=kind.seed)
        points = engine.random(n_design)
    elif kind.kind == Sampler.MONTE_CARLO:
        rng = np.random.default_rng(kind.seed)
        points = rng.random((n_design, d2))
    else:  # pragma: no cover - enum is exhaustive
        raise InvalidParamError(f"unknown sampler {kind.kind}")

    points = np.clip(points, 0.0, 1.0)
    a = np.ascontiguousarray(points[:, :dim])
    b = np.ascontiguousarray(points[:, dim:])
    return DesignMatrices(A=a, B=b)


def pivot_columns(design: DesignMatrices, k: int) -> np.ndarray:
    """C^(k): a copy of A whose column ``k`` is replaced by B's column ``k``."""
    if not 0 <= k < design.dim:
        raise IndexError(f"feature index {k} out of range [0, {design.dim})")
    c = design.A.copy()
    c[:, k] = design.B[:, k]
    return c
