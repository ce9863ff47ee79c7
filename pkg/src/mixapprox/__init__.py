"""Finite Gaussian-mixture approximation: moment-matching constructions and spectral lower-bound certificates."""

__version__ = "0.1.0"

from .approximators import (
    construct,
    envelope,
    gauss_quadrature,
    local_moment_match,
    truncate_and_match,
    upper_bound_envelope,
)
from .certificates import (
    Certificate,
    chi2_to_tv_constants,
    closed_form_lb,
    inapprox_bound,
    lambda_min,
    low_rank_gap,
    ortho_expansion_bound,
    trig_moment_matrix,
    tv_certificate,
    weighted_hankel_lb,
    wrapped_density_min,
)
from .errors import (
    MixApproxError,
    NumericalError,
    OutOfRegimeError,
    PrecisionError,
    SandwichViolation,
    ValidationError,
)
from .estimators import NPMLE, MixtureApproximator
from .laws import (
    Arc,
    Atomic,
    Conditioned,
    Gaussian,
    Laplace,
    MixingLaw,
    Scaled,
    SubWeibull,
    TruncPareto,
    Uniform,
    law_from_dict,
)
from .mixtures import MixtureDensity, chi2_moment_bound, divergence, fdiv_chain_check, mixture_density
from .npmle import BoundedSupport, NpmleProblem, SubWeibullSupport, npmle_fit, rate_scan
from .precision import Precision
