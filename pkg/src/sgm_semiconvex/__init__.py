"""Score-based sampling on semiconvex targets: potentials, sampler, scores, W2 and bounds."""

from .convexity import B_integral, ConvexityParams, beta_os, beta_os_kmu, t_bar, t_star
from .errors import (
    BracketError,
    DivergedTrajectoryError,
    InputError,
    NumericalError,
    SGMError,
    SizeError,
    UnsupportedParametersError,
)
from .forward import exact_score, ou_coeffs
from .potentials import from_config, two_mode_mixture
from .sampler import SamplerConfig, backward_em, coupled_em
from .scorenet import ScoreModel, fit
from .wasserstein import W2Report, w2, w2_1d, w2_assignment, w2_gaussian

__version__ = "0.1.0"
