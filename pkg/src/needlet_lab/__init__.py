"""Shrinking-bandwidth spherical needlets over Poisson samples.

Build a center sequence, derive the smooth spectral weights, discretize the
needlet frame on an exact cubature grid, simulate the Poisson needlet field,
and compare empirical statistics against exact moment identities and the
closed-form normal-approximation bounds.
"""

from .cltlab import (
    C_TILDE,
    BoundContext,
    CltReport,
    ExperimentConfig,
    bootstrap_se,
    empirical_cumulants,
    empirical_distance,
    map_replications,
    norm_cdf,
    norm_quantile,
    run_experiment,
    theoretical_bound,
    theoretical_bounds,
)
from .cubature import (
    CubatureRule,
    NeedletFrame,
    gauss_legendre_sphere,
    integrate,
    needlet_frame,
    separated_subset,
)
from .errors import ConfigError, DegenerateRegimeError
from .field import (
    CovarianceMatrix,
    FieldRealization,
    FunctionalMoments,
    NormalizationConstants,
    coefficient_at,
    coefficient_sd,
    coefficients,
    covariance,
    eval_field,
    evaluation_matrix,
    exact_fourth_cumulant,
    expected_functional_moments,
    functional_norm_sq,
    normalization_constants,
    reconstruct,
)
from .harmonics import (
    cart_to_sph,
    geodesic,
    kernel_phi,
    kernel_sup,
    legendre_p,
    legendre_series,
    localization_envelope,
    sph_to_cart,
)
from .poisson import PoissonSample, derive_seed, sample_poisson_field
from .scaling import (
    GammaSpec,
    ScaleParams,
    ScaleSequence,
    build_scale_sequence,
    resolution_exponent,
)
from .weights import WeightSystem, build_weight_system, smooth_step

__version__ = "0.1.0"
