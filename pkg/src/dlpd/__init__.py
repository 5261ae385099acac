"""Dynamic linear programming discriminant (DLPD) classification.

A linear discriminant whose class means and pooled covariance are
kernel-smoothed in an observed covariate ``u``; the discriminant direction at
each ``u`` is a Dantzig-selector estimate obtained by linear programming.
"""

from .baselines import KNNBaseline, StaticLPDClassifier, fit_static_lpd, knn_classify
from .classifier import (DlpdModel, OracleModel, RiskEstimate, bayes_classify,
                         bayes_conditional_risk, bayes_expected_risk, dlpd_classify,
                         dlpd_conditional_risk, dlpd_score, mahalanobis_delta)
from .core import ClassLabel, DataSet, seeded_rng, std_normal_cdf
from .dantzig import DantzigProblem, DantzigSolution, SolveStatus, lambda_rate, solve_dantzig
from .estimator import DLPDClassifier
from .exceptions import (AllWindowsEmptyError, DataSchemaError, DegenerateDirectionError,
                         DLPDError, DomainError, EmptyWindowError, InfeasibleError,
                         SingularCovarianceError)
from .kernels import Bandwidth, KernelSpec, make_kernel, rate_bandwidth
from .local_moments import LocalMoments, pooled_local_moments
from .model_selection import (BandwidthCvConfig, LambdaCvConfig, select_bandwidth,
                              select_lambda)
from .simulation import ModelSpec, oracle_of, sample_dataset, sample_test_dataset, true_beta

__version__ = "0.1.0"

__all__ = [
    "KNNBaseline", "StaticLPDClassifier", "fit_static_lpd", "knn_classify", "DlpdModel",
    "OracleModel", "RiskEstimate", "bayes_classify", "bayes_conditional_risk",
    "bayes_expected_risk", "dlpd_classify", "dlpd_conditional_risk", "dlpd_score",
    "mahalanobis_delta", "ClassLabel", "DataSet", "seeded_rng", "std_normal_cdf",
    "DantzigProblem", "DantzigSolution", "SolveStatus", "lambda_rate", "solve_dantzig",
    "DLPDClassifier", "AllWindowsEmptyError", "DataSchemaError", "DegenerateDirectionError",
    "DLPDError", "DomainError", "EmptyWindowError", "InfeasibleError",
    "SingularCovarianceError", "Bandwidth", "KernelSpec", "make_kernel", "rate_bandwidth",
    "LocalMoments", "pooled_local_moments", "BandwidthCvConfig", "LambdaCvConfig",
    "select_bandwidth", "select_lambda", "ModelSpec", "oracle_of", "sample_dataset",
    "sample_test_dataset", "true_beta",
]
