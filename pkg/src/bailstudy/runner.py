"""Experiment orchestration: the method x model x subset grid on disk.

A run directory holds everything needed to audit any reported number: the
config snapshot, the split, subset memberships, serialized models, per-cell
prediction CSVs, and the evaluation reports. Cells are checkpointed by their
prediction file, so re-running a finished config trains nothing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .domain import CaseRecord, ImputationMethod
from .errors import InvalidConfigError, UnknownCaseError
from .evaluation import (
    EffectSummary,
    MccTable,
    PredictionSet,
    aggregate_importance,
    method_vs_model_effect,
    prediction_histogram,
    stratified_mcc_table,
)
from .imputation import (
    DEFAULT_NEIGHBOR_COUNT,
    DEFAULT_PROPENSITY_CLIP,
    TrainingPool,
    apply_imputation,
    build_raw_pool,
)
from .ingest import FeatureMatrix, FeatureSchema, encode_features, load_cases, load_schema, save_schema, write_cases_csv
from .learners import (
    BoostConfig,
    BoostedModel,
    ForestConfig,
    LogisticConfig,
    ModelKind,
    gain_importance,
    save_model,
    train_model,
)
from .sampling import BalancedSubset, balanced_subsets, stratified_split
from .seeding import derive_seed
from .synthgen import GeneratorConfig, STATUS_STRINGS, generate, generator_schema, records, write_truth_csv

ALL_METHODS = tuple(ImputationMethod)
ALL_MODELS = tuple(ModelKind)


@dataclass(frozen=True)
class CsvSource:
    cases_path: str
    schema_path: str


@dataclass(frozen=True)
class SyntheticSource:
    generator: GeneratorConfig


@dataclass(frozen=True)
class ExperimentConfig:
    """Defaults reproduce the full grid: 5 methods x 3 models x 25 subsets."""

    data: CsvSource | SyntheticSource
    output_dir: str
    seed: int = 0
    n_subsets: int = 25
    test_fraction: float = 0.2
    methods: tuple[ImputationMethod, ...] = ALL_METHODS
    models: tuple[ModelKind, ...] = ALL_MODELS
    threshold: float = 0.5
    nn_k: int = DEFAULT_NEIGHBOR_COUNT
    nn_tie_break_fta: bool = False
    ip_clip: float = DEFAULT_PROPENSITY_CLIP
    logistic: LogisticConfig = field(default_factory=LogisticConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    gbdt: BoostConfig = field(default_factory=BoostConfig)
    report_case_ids: tuple[str, ...] = ()
    histogram_bins: int = 40
    importance_top_k: int = 15

    def __post_init__(self) -> None:
        if self.n_subsets < 1:
            raise InvalidConfigError("n_subsets must be positive")
        if not self.methods or not self.models:
            raise InvalidConfigError("methods and models must be non-empty")

    def to_json_dict(self) -> dict:
        if isinstance(self.data, SyntheticSource):
            data = {"kind": "synthetic", "generator": self.data.generator.to_json_dict()}
        else:
            data = {
                "kind": "csv",
                "cases": self.data.cases_path,
                "schema": self.data.schema_path,
            }
        return {
            "data": data,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "n_subsets": self.n_subsets,
            "test_fraction": self.test_fraction,
            "methods": [m.value for m in self.methods],
            "models": [m.value for m in self.models],
            "threshold": self.threshold,
            "nn_k": self.nn_k,
            "nn_tie_break_fta": self.nn_tie_break_fta,
            "ip_clip": self.ip_clip,
            "logistic": {
                "max_iterations": self.logistic.max_iterations,
                "l2_strength": self.logistic.l2_strength,
                "tolerance": self.logistic.tolerance,
            },
            "forest": {
                "n_trees": self.forest.n_trees,
                "max_depth": self.forest.max_depth,
                "min_samples_leaf": self.forest.min_samples_leaf,
                "features_per_split": self.forest.features_per_split,
                "bootstrap": self.forest.bootstrap,
            },
            "gbdt": {
                "n_trees": self.gbdt.n_trees,
                "max_depth": self.gbdt.max_depth,
                "learning_rate": self.gbdt.learning_rate,
                "row_subsample": self.gbdt.row_subsample,
                "col_subsample": self.gbdt.col_subsample,
                "l2": self.gbdt.l2,
                "l1": self.gbdt.l1,
                "min_child_weight": self.gbdt.min_child_weight,
            },
            "report_case_ids": list(self.report_case_ids),
            "histogram_bins": self.histogram_bins,
            "importance_top_k": self.importance_top_k,
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "ExperimentConfig":
        data_doc = doc["data"]
        data: CsvSource | SyntheticSource
        if data_doc["kind"] == "synthetic":
            data = SyntheticSource(GeneratorConfig.from_json_dict(data_doc["generator"]))
        elif data_doc["kind"] == "csv":
            data = CsvSource(cases_path=data_doc["cases"], schema_path=data_doc["schema"])
        else:
            raise InvalidConfigError(f"unknown data kind {data_doc['kind']!r}")
        return cls(
            data=data,
            output_dir=doc["output_dir"],
            seed=int(doc.get("seed", 0)),
            n_subsets=int(doc.get("n_subsets", 25)),
            test_fraction=float(doc.get("test_fraction", 0.2)),
            methods=tuple(
                ImputationMethod(m)
                for m in doc.get("methods", [m.value for m in ALL_METHODS])
            ),
            models=tuple(
                ModelKind(m) for m in doc.get("models", [m.value for m in ALL_MODELS])
            ),
            threshold=float(doc.get("threshold", 0.5)),
            nn_k=int(doc.get("nn_k", DEFAULT_NEIGHBOR_COUNT)),
            nn_tie_break_fta=bool(doc.get("nn_tie_break_fta", False)),
            ip_clip=float(doc.get("ip_clip", DEFAULT_PROPENSITY_CLIP)),
            logistic=LogisticConfig(**doc.get("logistic", {})),
            forest=ForestConfig(**doc.get("forest", {})),
            gbdt=BoostConfig(**doc.get("gbdt", {})),
            report_case_ids=tuple(doc.get("report_case_ids", ())),
            histogram_bins=int(doc.get("histogram_bins", 40)),
            importance_top_k=int(doc.get("importance_top_k", 15)),
        )


@dataclass(frozen=True)
class ExperimentResult:
    run_dir: Path
    mcc_table: MccTable
    effect: EffectSummary
    importance: Mapping[ImputationMethod, tuple[tuple[str, float], ...]]
    per_case: Mapping[str, Mapping[str, Mapping[str, float]]]
    trained_cells: int
    reused_cells: int
    grid_cells: int
    pool_sizes: Mapping[ImputationMethod, int]


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cell_name(method: ImputationMethod, model: ModelKind, subset: int) -> str:
    return f"{method.value}_{model.value}_{subset:02d}"


def _write_predictions(path: Path, case_ids: Sequence[str], probs: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "probability"])
        for cid, p in zip(case_ids, probs):
            writer.writerow([cid, repr(float(p))])


def _read_predictions(path: Path) -> tuple[tuple[str, ...], np.ndarray]:
    ids: list[str] = []
    probs: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            ids.append(row[0])
            probs.append(float(row[1]))
    return tuple(ids), np.asarray(probs, dtype=np.float64)


def load_experiment_data(
    config: ExperimentConfig, run_dir: Path | None = None
) -> tuple[list[CaseRecord], FeatureSchema]:
    """Materialize the case population: generate synthetic data or read CSV."""
    if isinstance(config.data, SyntheticSource):
        cases = generate(config.data.generator)
        schema = generator_schema(config.data.generator)
        if run_dir is not None:
            write_cases_csv(records(cases), schema, run_dir / "cases.csv", STATUS_STRINGS)
            write_truth_csv(cases, run_dir / "truth.csv")
            save_schema(schema, run_dir / "schema.json")
        return records(cases), schema
    schema = load_schema(config.data.schema_path)
    return load_cases(config.data.cases_path, schema), schema


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute ingest, split, imputation, subsetting, training, evaluation.

    Fully reproducible from (config, seed): two runs write byte-identical
    prediction artifacts.
    """
    run_dir = Path(config.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "models").mkdir(exist_ok=True)
    (run_dir / "predictions").mkdir(exist_ok=True)
    (run_dir / "report").mkdir(exist_ok=True)
    _write_json(run_dir / "config.json", config.to_json_dict())

    cases, schema = load_experiment_data(config, run_dir)
    matrix = encode_features(cases, schema)
    by_id = {c.case_id: c for c in cases}
    row_of = {cid: i for i, cid in enumerate(matrix.case_ids)}

    split = stratified_split(cases, config.test_fraction, derive_seed(config.seed, "split"))
    _write_json(
        run_dir / "split.json",
        {"seed": split.seed, "train_ids": list(split.train_ids), "test_ids": list(split.test_ids)},
    )

    train_cases = [by_id[cid] for cid in split.train_ids]
    train_matrix = matrix.take([row_of[cid] for cid in split.train_ids])
    test_matrix = matrix.take([row_of[cid] for cid in split.test_ids])
    test_labels = np.array([by_id[cid].fta_observed for cid in split.test_ids], dtype=bool)
    test_determinate = np.array(
        [by_id[cid].is_determinate for cid in split.test_ids], dtype=bool
    )
    raw_pool = build_raw_pool(train_cases, train_matrix)

    pools: dict[ImputationMethod, TrainingPool] = {}
    subsets: dict[ImputationMethod, list[BalancedSubset]] = {}
    (run_dir / "subsets").mkdir(exist_ok=True)
    for method in config.methods:
        pool = apply_imputation(
            method,
            raw_pool,
            nn_k=config.nn_k,
            nn_tie_break_fta=config.nn_tie_break_fta,
            ip_clip=config.ip_clip,
        )
        pools[method] = pool
        method_subsets = balanced_subsets(
            pool, config.n_subsets, derive_seed(config.seed, "subsets", method.value)
        )
        subsets[method] = method_subsets
        _write_json(
            run_dir / "subsets" / f"{method.value}.json",
            {
                "method": method.value,
                "minority_label": method_subsets[0].minority_label,
                "subsets": [list(s.case_ids) for s in method_subsets],
            },
        )

    prediction_sets: list[PredictionSet] = []
    importance_vectors: dict[ImputationMethod, list[dict[str, float]]] = {
        m: [] for m in config.methods
    }
    trained = 0
    reused = 0
    for method in config.methods:
        for model_kind in config.models:
            for subset in subsets[method]:
                cell = _cell_name(method, model_kind, subset.subset_index)
                pred_path = run_dir / "predictions" / f"{cell}.csv"
                model_path = run_dir / "models" / f"{cell}.json"
                if pred_path.exists():
                    ids, probs = _read_predictions(pred_path)
                    reused += 1
                else:
                    cell_pool = pools[method].subset_by_ids(subset.case_ids)
                    model = train_model(
                        model_kind,
                        cell_pool,
                        seed=derive_seed(
                            config.seed,
                            "train",
                            method.value,
                            model_kind.value,
                            subset.subset_index,
                        ),
                        logistic_config=config.logistic,
                        forest_config=config.forest,
                        boost_config=config.gbdt,
                    )
                    probs = model.predict_proba(test_matrix)
                    ids = test_matrix.case_ids
                    save_model(model, model_path)
                    _write_predictions(pred_path, ids, probs)
                    trained += 1
                    if isinstance(model, BoostedModel):
                        shares = gain_importance(model)
                        importance_vectors[method].append(
                            dict(zip(model.column_names, shares.tolist()))
                        )
                prediction_sets.append(
                    PredictionSet(
                        method=method,
                        model_kind=model_kind,
                        subset_index=subset.subset_index,
                        case_ids=ids,
                        probabilities=probs,
                    )
                )

    mcc_table = stratified_mcc_table(
        prediction_sets, test_labels, test_determinate, config.threshold
    )
    effect = method_vs_model_effect(prediction_sets) if (
        len(config.methods) > 1 and len(config.models) > 1
    ) else None
    importance = {
        method: tuple(aggregate_importance(vectors, config.importance_top_k))
        for method, vectors in importance_vectors.items()
        if vectors
    }
    per_case = _per_case_summary(prediction_sets, config.report_case_ids)

    _write_reports(
        run_dir,
        config,
        mcc_table,
        effect,
        importance,
        per_case,
        prediction_sets,
        pools,
    )
    return ExperimentResult(
        run_dir=run_dir,
        mcc_table=mcc_table,
        effect=effect if effect is not None else _empty_effect(),
        importance=importance,
        per_case=per_case,
        trained_cells=trained,
        reused_cells=reused,
        grid_cells=len(config.methods) * len(config.models) * config.n_subsets,
        pool_sizes={m: pools[m].n_cases for m in config.methods},
    )


def _empty_effect() -> EffectSummary:
    return EffectSummary(
        method_axis_mean=float("nan"),
        model_axis_mean=float("nan"),
        method_pair_distances={},
        model_pair_distances={},
    )


def _per_case_summary(
    prediction_sets: Sequence[PredictionSet], case_ids: Sequence[str]
) -> dict[str, dict[str, dict[str, float]]]:
    if not case_ids:
        return {}
    reference = prediction_sets[0].case_ids
    positions = {}
    for cid in case_ids:
        try:
            positions[cid] = reference.index(cid)
        except ValueError:
            raise UnknownCaseError(f"case {cid!r} is not in the test set") from None
    sums: dict[tuple[str, str, str], list[float]] = {}
    for ps in prediction_sets:
        for cid, pos in positions.items():
            key = (cid, ps.method.value, ps.model_kind.value)
            sums.setdefault(key, []).append(float(ps.probabilities[pos]))
    out: dict[str, dict[str, dict[str, float]]] = {}
    for (cid, method, model), values in sums.items():
        out.setdefault(cid, {}).setdefault(method, {})[model] = float(np.mean(values))
    return out


def _write_reports(
    run_dir: Path,
    config: ExperimentConfig,
    mcc_table: MccTable,
    effect: EffectSummary | None,
    importance: Mapping[ImputationMethod, tuple[tuple[str, float], ...]],
    per_case: Mapping,
    prediction_sets: Sequence[PredictionSet],
    pools: Mapping[ImputationMethod, TrainingPool],
) -> None:
    report_dir = run_dir / "report"

    doc: dict = {
        "grid": {
            "methods": [m.value for m in config.methods],
            "models": [m.value for m in config.models],
            "n_subsets": config.n_subsets,
            "cells": len(config.methods) * len(config.models) * config.n_subsets,
        },
        "pool_sizes": {m.value: pools[m].n_cases for m in config.methods},
        "mcc": mcc_table.rows(),
        "per_case": per_case,
        "importance": {
            method.value: [[name, share] for name, share in ranked]
            for method, ranked in importance.items()
        },
    }
    if effect is not None:
        doc["distances"] = {
            "method_axis_mean": effect.method_axis_mean,
            "model_axis_mean": effect.model_axis_mean,
            "per_subset_method_axis_mean": effect.per_subset_method_axis_mean,
            "per_subset_model_axis_mean": effect.per_subset_model_axis_mean,
            "method_pairs": {
                f"{a.value}|{b.value}": d
                for (a, b), d in effect.method_pair_distances.items()
            },
            "model_pairs": {
                f"{a.value}|{b.value}": d
                for (a, b), d in effect.model_pair_distances.items()
            },
        }
    _write_json(report_dir / "report.json", doc)

    with open(report_dir / "mcc_table.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "method",
                "model",
                "determinate_mean",
                "determinate_std",
                "indeterminate_mean",
                "indeterminate_std",
            ]
        )
        for row in mcc_table.rows():
            writer.writerow(
                [
                    row["method"],
                    row["model"],
                    repr(row["determinate_mean"]),
                    repr(row["determinate_std"]),
                    repr(row["indeterminate_mean"]),
                    repr(row["indeterminate_std"]),
                ]
            )

    if effect is not None:
        with open(report_dir / "distances.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["axis", "first", "second", "wasserstein"])
            for (a, b), d in sorted(
                effect.method_pair_distances.items(),
                key=lambda kv: (kv[0][0].value, kv[0][1].value),
            ):
                writer.writerow(["method", a.value, b.value, repr(d)])
            for (a, b), d in sorted(
                effect.model_pair_distances.items(),
                key=lambda kv: (kv[0][0].value, kv[0][1].value),
            ):
                writer.writerow(["model", a.value, b.value, repr(d)])

    if importance:
        with open(report_dir / "importance.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "rank", "feature", "mean_gain_share"])
            for method in sorted(importance, key=lambda m: m.value):
                for rank, (name, share) in enumerate(importance[method], start=1):
                    writer.writerow([method.value, rank, name, repr(share)])

    cells: dict[tuple[str, str], list[np.ndarray]] = {}
    for ps in prediction_sets:
        cells.setdefault((ps.method.value, ps.model_kind.value), []).append(
            ps.probabilities
        )
    with open(report_dir / "histograms.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "model", "bin_low", "bin_high", "count"])
        for (method, model), arrays in sorted(cells.items()):
            hist = prediction_histogram(np.concatenate(arrays), config.histogram_bins)
            for lo, hi, count in hist:
                writer.writerow([method, model, repr(lo), repr(hi), count])


def report_case(
    run_dir: str | Path, case_ids: Sequence[str]
) -> dict[str, dict[str, dict[str, float]]]:
    """Mean predicted FTA probability per method and model for given cases.

    Reads the stored prediction CSVs, so it works on any completed run.
    """
    run_dir = Path(run_dir)
    pred_dir = run_dir / "predictions"
    files = sorted(pred_dir.glob("*.csv"))
    if not files:
        raise UnknownCaseError(f"no prediction artifacts under {pred_dir}")
    sums: dict[str, dict[str, dict[str, list[float]]]] = {cid: {} for cid in case_ids}
    positions: dict[str, int] | None = None
    for path in files:
        parts = path.stem.split("_")
        model = parts[-2]
        method = "_".join(parts[:-2])
        ids, probs = _read_predictions(path)
        if positions is None:
            index = {cid: i for i, cid in enumerate(ids)}
            positions = {}
            for cid in case_ids:
                if cid not in index:
                    raise UnknownCaseError(f"case {cid!r} is not in the test set")
                positions[cid] = index[cid]
        for cid, pos in positions.items():
            sums[cid].setdefault(method, {}).setdefault(model, []).append(
                float(probs[pos])
            )
    return {
        cid: {
            method: {model: float(np.mean(vals)) for model, vals in models.items()}
            for method, models in methods.items()
        }
        for cid, methods in sums.items()
    }
