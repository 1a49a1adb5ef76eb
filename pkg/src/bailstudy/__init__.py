"""Failure-to-appear modelling under censored bail outcomes.

Pretrial detention censors the outcome it tries to prevent: a detained
defendant almost always appears in court, so the recorded label says nothing
about what they would have done if released. This package classifies cases
as determinate or indeterminate, applies five label-imputation strategies,
trains three weight-aware classifier families on balanced subsets, and
compares their predictive behaviour, with a synthetic generator providing
the counterfactual ground truth that real data cannot.
"""

from .domain import (
    BailStatus,
    BailStatusKind,
    CaseRecord,
    ImputationMethod,
    LabelStatus,
    classify_label_status,
)
from .evaluation import (
    ks_statistic,
    mcc_scaled,
    wasserstein_1d,
)
from .imputation import (
    TrainingPool,
    apply_imputation,
    build_raw_pool,
    fit_propensity,
    impute_corr,
    impute_daf,
    impute_nn,
    impute_obs,
    impute_obs_ip,
)
from .ingest import FeatureMatrix, FeatureSchema, encode_features, load_cases
from .learners import ModelKind, train_gbdt, train_logistic, train_random_forest
from .sampling import balanced_subsets, stratified_split
from .synthgen import GeneratorConfig, generate, generator_schema, oracle_metrics

__version__ = "0.1.0"

__all__ = [
    "BailStatus",
    "BailStatusKind",
    "CaseRecord",
    "FeatureMatrix",
    "FeatureSchema",
    "GeneratorConfig",
    "ImputationMethod",
    "LabelStatus",
    "ModelKind",
    "TrainingPool",
    "apply_imputation",
    "balanced_subsets",
    "build_raw_pool",
    "classify_label_status",
    "encode_features",
    "fit_propensity",
    "generate",
    "generator_schema",
    "impute_corr",
    "impute_daf",
    "impute_nn",
    "impute_obs",
    "impute_obs_ip",
    "ks_statistic",
    "load_cases",
    "mcc_scaled",
    "oracle_metrics",
    "stratified_split",
    "train_gbdt",
    "train_logistic",
    "train_random_forest",
    "wasserstein_1d",
]
