"""Space-scale attribution for black-box image classifiers.

Perturbs regions of an image's discrete wavelet transform with
quasi-Monte Carlo masks, estimates total Sobol indices of each region,
and derives heatmaps, scale embeddings, faithfulness metrics and
minimal-image reconstructions from the resulting map.
"""

__version__ = "0.1.0"

from .analysis import (
    frequency_curve,
    minimal_image,
    reconstruct_topk,
    scale_embed,
    spatial_project,
)
from .errors import (
    InvalidParamError,
    InvalidSubbandError,
    NonFiniteError,
    ScorerError,
    ShapeError,
)
from .metrics import AttributionGrid, deletion, insertion, mu_fidelity
from .pipeline import WCAMap, WcamConfig, compute_wcam
from .sampling import DesignMatrices, Sampler, SamplerKind, draw_design, pivot_columns
from .sensitivity import ScoredDesign, SobolIndices, jansen_estimate, sobol_hoeffding_check
from .wavelet import (
    Orientation,
    SubbandId,
    WaveletFamily,
    WaveletPyramid,
    WaveletSpec,
    dwt_forward,
    dwt_inverse,
    subband_order,
    subband_region,
)

__all__ = [
    "__version__",
    "AttributionGrid",
    "DesignMatrices",
    "InvalidParamError",
    "InvalidSubbandError",
    "NonFiniteError",
    "Orientation",
    "Sampler",
    "SamplerKind",
    "ScoredDesign",
    "ScorerError",
    "ShapeError",
    "SobolIndices",
    "SubbandId",
    "WCAMap",
    "WaveletFamily",
    "WaveletPyramid",
    "WaveletSpec",
    "WcamConfig",
    "compute_wcam",
    "deletion",
    "draw_design",
    "dwt_forward",
    "dwt_inverse",
    "frequency_curve",
    "insertion",
    "jansen_estimate",
    "minimal_image",
    "mu_fidelity",
    "pivot_columns",
    "reconstruct_topk",
    "scale_embed",
    "sobol_hoeffding_check",
    "spatial_project",
    "subband_order",
    "subband_region",
]
