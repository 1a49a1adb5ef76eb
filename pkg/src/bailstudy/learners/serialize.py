"""Versioned JSON serialization for trained models.

Floats are written with Python's shortest round-trip repr, so a reloaded
model reproduces bitwise-identical predictions.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import InvalidConfigError
from .boosting import BoostConfig, BoostedModel, gains_from_trees
from .forest import ForestConfig, ForestModel
from .logistic import LinearModel, LogisticConfig
from .trees import Tree

FORMAT_NAME = "bailstudy.model"
FORMAT_VERSION = 1


def _tree_to_dict(tree: Tree) -> dict:
    doc = {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }
    if tree.gain is not None:
        doc["gain"] = tree.gain.tolist()
    return doc


def _tree_from_dict(doc: dict) -> Tree:
    return Tree(
        feature=np.asarray(doc["feature"], dtype=np.int64),
        threshold=np.asarray(doc["threshold"], dtype=np.float64),
        left=np.asarray(doc["left"], dtype=np.int64),
        right=np.asarray(doc["right"], dtype=np.int64),
        value=np.asarray(doc["value"], dtype=np.float64),
        gain=np.asarray(doc["gain"], dtype=np.float64) if "gain" in doc else None,
    )


def model_to_dict(model: LinearModel | ForestModel | BoostedModel) -> dict:
    doc: dict = {"format": FORMAT_NAME, "version": FORMAT_VERSION}
    if isinstance(model, LinearModel):
        doc.update(
            kind="logistic",
            columns=list(model.column_names),
            config=asdict(model.config),
            coefficients=model.coefficients.tolist(),
            intercept=model.intercept,
            n_iterations=model.n_iterations,
            converged=model.converged,
        )
    elif isinstance(model, ForestModel):
        doc.update(
            kind="forest",
            columns=list(model.column_names),
            config=asdict(model.config),
            seed=model.seed,
            trees=[_tree_to_dict(t) for t in model.trees],
        )
    elif isinstance(model, BoostedModel):
        doc.update(
            kind="gbdt",
            columns=list(model.column_names),
            config=asdict(model.config),
            seed=model.seed,
            base_score=model.base_score,
            trees=[_tree_to_dict(t) for t in model.trees],
        )
    else:
        raise InvalidConfigError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict) -> LinearModel | ForestModel | BoostedModel:
    if doc.get("format") != FORMAT_NAME:
        raise InvalidConfigError("not a model document")
    if doc.get("version") != FORMAT_VERSION:
        raise InvalidConfigError(f"unsupported model version {doc.get('version')}")
    kind = doc["kind"]
    columns = tuple(doc["columns"])
    if kind == "logistic":
        return LinearModel(
            coefficients=np.asarray(doc["coefficients"], dtype=np.float64),
            intercept=float(doc["intercept"]),
            column_names=columns,
            config=LogisticConfig(**doc["config"]),
            n_iterations=int(doc["n_iterations"]),
            converged=bool(doc["converged"]),
        )
    if kind == "forest":
        return ForestModel(
            trees=tuple(_tree_from_dict(t) for t in doc["trees"]),
            column_names=columns,
            config=ForestConfig(**doc["config"]),
            seed=int(doc["seed"]),
        )
    if kind == "gbdt":
        trees = tuple(_tree_from_dict(t) for t in doc["trees"])
        return BoostedModel(
            trees=trees,
            base_score=float(doc["base_score"]),
            column_names=columns,
            config=BoostConfig(**doc["config"]),
            seed=int(doc["seed"]),
            per_tree_gains=gains_from_trees(trees, len(columns)),
        )
    raise InvalidConfigError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path: str | Path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
