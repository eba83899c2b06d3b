"""Bayesian marginal-likelihood-ratio test of homogeneity for two-component normal mixtures."""

from .asymptotics import (
    Case1,
    Case2,
    Case3,
    asymptotic_L,
    case1_L_closed,
    case1_L_integral,
    case2_L,
    case2_L_one_sided,
    case2_L_scaled,
    case3_L,
    exact_scale_limit,
    kl_leading,
    log_bayes_factor,
    rlct_correspondence,
)
from .errors import BracketError, ConvergenceError, DomainError
from .exact import marginal_L, marginal_L_case1, marginal_L_case2, marginal_L_case3
from .sampling import (
    MixtureParams,
    Sample,
    StreamKey,
    SufficientStats,
    read_sample,
    sample_alternative_prior,
    sample_mixture,
    sample_null,
    sufficient_stats,
    write_sample,
)
from .testing import (
    McEstimate,
    TestReport,
    calibrate_threshold,
    calibrate_threshold_mc,
    estimate_level,
    estimate_power,
    run_test,
)

__version__ = "0.1.0"
