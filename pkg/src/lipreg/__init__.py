"""Truncated Lipschitz probability regression on metric samples.

Fits per-point probabilities in [theta, 1-theta] under pairwise Lipschitz
constraints by minimizing the empirical log loss with a path-following
interior-point method, then predicts at new points by exact
constant-preserving extension.
"""

from .barrier import BarrierEval, Polytope, analytic_center, barrier_eval, barrier_parameter
from .data import (
    IngestResult,
    Sample,
    TruncationParams,
    check_triangle_inequality,
    default_theta,
    load_labeled_queries,
    load_query_matrix,
    load_query_points,
    load_sample,
    pairwise_distances,
    sample_to_matrix_csv,
)
from .exceptions import (
    CertificateError,
    ConditioningError,
    DataError,
    DomainError,
    InvariantError,
    LipregError,
    ModelError,
    OracleError,
)
from .experiments import (
    TrialReport,
    agnostic_lb_trial,
    binom_gap_trial,
    finite_class_bound,
    gap_exceedance_exact,
    generalization_bound,
    realizable_lb_trial,
    wilson_interval,
)
from .objective import RiskEval, expected_risk, risk
from .oracle import CrosscheckReport, crosscheck, grid_solve, oracle_solve
from .predictor import (
    Model,
    extend,
    load_model,
    model_from_document,
    model_to_document,
    predict_batch,
    save_model,
)
from .solver import (
    FitResult,
    PathConstants,
    SolverState,
    TraceRecord,
    certificate,
    fit,
    increase_t,
    initial_state,
    local_dual_norm,
    newton_step,
)

__version__ = "1.0.0"

__all__ = [
    "BarrierEval",
    "CertificateError",
    "ConditioningError",
    "CrosscheckReport",
    "DataError",
    "DomainError",
    "FitResult",
    "IngestResult",
    "InvariantError",
    "LipregError",
    "Model",
    "ModelError",
    "OracleError",
    "PathConstants",
    "Polytope",
    "RiskEval",
    "Sample",
    "SolverState",
    "TraceRecord",
    "TrialReport",
    "TruncationParams",
    "agnostic_lb_trial",
    "analytic_center",
    "barrier_eval",
    "barrier_parameter",
    "binom_gap_trial",
    "certificate",
    "check_triangle_inequality",
    "crosscheck",
    "default_theta",
    "expected_risk",
    "extend",
    "finite_class_bound",
    "fit",
    "gap_exceedance_exact",
    "generalization_bound",
    "grid_solve",
    "increase_t",
    "initial_state",
    "load_labeled_queries",
    "load_model",
    "load_query_matrix",
    "load_query_points",
    "load_sample",
    "local_dual_norm",
    "model_from_document",
    "model_to_document",
    "newton_step",
    "oracle_solve",
    "pairwise_distances",
    "predict_batch",
    "realizable_lb_trial",
    "risk",
    "save_model",
    "sample_to_matrix_csv",
    "wilson_interval",
    "__version__",
]
