"""Torus PCA: dimension reduction for multivariate angular data."""

from .cluster import adaptive_branch_cut, single_linkage
from .deformation import DeformationSpec, build_spec, deform, inverse_deform, to_sphere
from .errors import (
    ConfigError,
    FitFailure,
    InvalidInputError,
    ParseError,
    PolarDegenerateError,
    ProjectionUndefinedError,
    SingularityError,
    TorusPCAError,
)
from .geometry import circular_intrinsic_mean, torus_distance, torus_frechet_variance
from .modehunt import find_minimum_regions, split_at_minima, wrapped_gaussian_density
from .pipeline import RunConfig, TpcaResult, dtpns_best, run_tpca
from .pns import fit_great_subsphere, fit_subsphere, pns_decompose
from .sphere_test import mle_fit, small_sphere_test
from .variance import residual_variance_profile, tangent_pca_profile

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DeformationSpec",
    "FitFailure",
    "InvalidInputError",
    "ParseError",
    "PolarDegenerateError",
    "ProjectionUndefinedError",
    "RunConfig",
    "SingularityError",
    "TorusPCAError",
    "TpcaResult",
    "adaptive_branch_cut",
    "build_spec",
    "circular_intrinsic_mean",
    "deform",
    "dtpns_best",
    "find_minimum_regions",
    "fit_great_subsphere",
    "fit_subsphere",
    "inverse_deform",
    "mle_fit",
    "pns_decompose",
    "residual_variance_profile",
    "run_tpca",
    "single_linkage",
    "small_sphere_test",
    "split_at_minima",
    "tangent_pca_profile",
    "to_sphere",
    "torus_distance",
    "torus_frechet_variance",
    "wrapped_gaussian_density",
]
