"""Perona-Malik and curvature-flow diffusion by homotopy perturbation on pixel grids."""

from .errors import (
    DegenerateDenominatorError,
    DimensionMismatchError,
    HpmError,
    ImageFormatError,
    MaxRestartsExceeded,
    SeriesBlowupError,
    UnstableStepError,
)
from .field_poly import (
    TimePolyField,
    poly_add,
    poly_eval,
    poly_integrate_t,
    poly_mul,
    poly_reciprocal,
)
from .hpm_solver import (
    CurvatureFlow,
    DivergenceFlow,
    HpmConfig,
    SeriesSolution,
    advance,
    build_series,
    estimate_trust_radius,
)
from .pde_operators import (
    DiffusivitySpec,
    GaussianKernel,
    curvature_rhs,
    diffusivity_eval,
    divergence,
    gaussian_convolve,
    gradient,
    pm_divergence_rhs,
)

__version__ = "0.1.0"
