"""The three classifier families, each weight-aware and seed-deterministic."""

from __future__ import annotations

from enum import Enum

from .boosting import BoostConfig, BoostedModel, gain_importance, train_gbdt
from .forest import ForestConfig, ForestModel, train_random_forest
from .logistic import (
    LinearModel,
    LogisticConfig,
    fit_logistic,
    logistic_loss_gradient,
    train_logistic,
)
from .serialize import load_model, model_from_dict, model_to_dict, save_model


class ModelKind(Enum):
    LOGISTIC = "logistic"
    FOREST = "forest"
    GBDT = "gbdt"


def train_model(
    kind: ModelKind,
    pool,
    seed: int,
    logistic_config: LogisticConfig | None = None,
    forest_config: ForestConfig | None = None,
    boost_config: BoostConfig | None = None,
):
    if kind is ModelKind.LOGISTIC:
        return train_logistic(pool, logistic_config)
    if kind is ModelKind.FOREST:
        return train_random_forest(pool, forest_config, seed)
    return train_gbdt(pool, boost_config, seed)


__all__ = [
    "BoostConfig",
    "BoostedModel",
    "ForestConfig",
    "ForestModel",
    "LinearModel",
    "LogisticConfig",
    "ModelKind",
    "fit_logistic",
    "gain_importance",
    "load_model",
    "logistic_loss_gradient",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "train_gbdt",
    "train_logistic",
    "train_model",
    "train_random_forest",
]
