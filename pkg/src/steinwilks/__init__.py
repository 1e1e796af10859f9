"""Explicit chisquare-approximation bounds for likelihood-ratio statistics,
with a Monte Carlo validation harness for the built-in exponential, normal,
and logistic-regression models."""

from . import models  # noqa: F401  (registers the built-ins)
from .bound import (
    COROLLARY_CONSTANTS,
    BoundBreakdown,
    assemble_bound,
    compute_K1,
    compute_K2,
    compute_R,
    exponential_corollary_bound,
    logistic_bound_scaling,
    normal_corollary_bound,
)
from .contract import (
    Dataset,
    ParametricModel,
    QTMomentSet,
    Theta,
    WMomentSet,
    dataset_from_csv,
    dataset_to_csv,
    get_model,
    register_model,
    registered_models,
    validate_model,
)
from .fisher import FisherBlocks, partition_fisher, quadratic_form_g
from .mc import (
    MCEstimate,
    SweepRow,
    chisq_expectation,
    dimension_sweep,
    estimate_distance,
    rate_sweep,
    simulate_statistics,
    sweep_rows_to_csv,
    wilks_ks_check,
)
from .models import LRTResult, fit_mle, neg2_log_lambda
from .moments import (
    MomentValue,
    chisq_central_moment,
    gamma_mean_central_moment,
    halfnormal_abs_moment,
)
from .testfunc import (
    BUILTIN_TEST_FUNCTIONS,
    GridSpec,
    TestFunction,
    constant_function,
    reciprocal_quadratic,
    tabulated_test_function,
    validate_test_function,
    zero_function,
)

__version__ = "0.1.0"
