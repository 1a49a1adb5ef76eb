"""CSV ingestion, schema validation, and feature encoding.

The schema is a JSON document declaring, per feature, how raw strings become
numbers: binned numerics are replaced by bin midpoints, ordinals by their
rank, categoricals by one-hot groups, and booleans by 0/1. Six leakage-prone
columns are never encoded; the bail-status column is consumed only to derive
the determinacy label.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import BailStatus, BailStatusKind, CaseRecord
from .errors import (
    InvalidConfigError,
    MissingColumnError,
    SchemaMismatchError,
    UnknownBailStatusError,
    UnparseableValueError,
    ValueOutOfSchemaError,
)

#: Columns that must never become model features. The first two are
#: irrelevant to appearance; the last four only exist once bail has already
#: been decided, so using them would leak the decision into the prediction.
EXCLUDED_FEATURES = (
    "date",
    "magistrate",
    "bailType",
    "bailAmount",
    "bailStatus",
    "bailDenied",
)

MISSING_CATEGORY = "missing"

_TRUE_STRINGS = frozenset({"true", "t", "1", "yes"})
_FALSE_STRINGS = frozenset({"false", "f", "0", "no"})


class FeatureKind(Enum):
    BINNED_NUMERIC = "binned_numeric"
    ORDINAL = "ordinal"
    CATEGORICAL = "categorical"
    BOOLEAN = "boolean"


@dataclass(frozen=True)
class NumericBin:
    """One bin of a binned numeric feature. ``upper=None`` marks an
    open-ended bin, encoded against the feature's ``open_cap``."""

    lower: float
    upper: float | None = None
    label: str | None = None

    def matches(self, raw: str) -> bool:
        if self.label is not None:
            return raw == self.label
        try:
            value = float(raw)
        except ValueError:
            return False
        if self.upper is None:
            return value >= self.lower
        return self.lower <= value < self.upper

    def midpoint(self, open_cap: float | None) -> float:
        upper = self.upper
        if upper is None:
            if open_cap is None:
                raise InvalidConfigError(
                    f"open-ended bin starting at {self.lower} needs an open_cap"
                )
            upper = open_cap
        return 0.5 * (self.lower + upper)


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: FeatureKind
    bins: tuple[NumericBin, ...] = ()
    order: tuple[str, ...] = ()
    categories: tuple[str, ...] = ()
    allow_missing: bool = True
    open_cap: float | None = None

    def __post_init__(self) -> None:
        if self.kind is FeatureKind.BINNED_NUMERIC and not self.bins:
            raise InvalidConfigError(f"binned feature {self.name!r} declares no bins")
        if self.kind is FeatureKind.ORDINAL and not self.order:
            raise InvalidConfigError(f"ordinal feature {self.name!r} declares no order")
        if self.kind is FeatureKind.CATEGORICAL and not self.categories:
            raise InvalidConfigError(
                f"categorical feature {self.name!r} declares no categories"
            )

    def column_names(self) -> tuple[str, ...]:
        if self.kind is FeatureKind.CATEGORICAL:
            names = [f"{self.name}={c}" for c in self.categories]
            if self.allow_missing:
                names.append(f"{self.name}={MISSING_CATEGORY}")
            return tuple(names)
        return (self.name,)


@dataclass(frozen=True)
class FeatureSchema:
    """Declares every encodable feature plus the bail-status lookup.

    ``status_lookup`` maps the raw status strings of the source data onto
    :class:`BailStatus` values; this is where a dataset's encoding of
    "revoked because of failure to appear" is made explicit. Unknown status
    strings are a hard error during loading, never silently mapped.
    """

    features: tuple[FeatureSpec, ...]
    status_lookup: Mapping[str, BailStatus]
    id_column: str = "case_id"
    status_column: str = "bailStatus"
    outcome_column: str = "fta"
    excluded_features: tuple[str, ...] = EXCLUDED_FEATURES

    def __post_init__(self) -> None:
        if set(self.excluded_features) != set(EXCLUDED_FEATURES):
            raise InvalidConfigError(
                f"excluded_features must be exactly {sorted(EXCLUDED_FEATURES)}"
            )
        overlap = {f.name for f in self.features} & set(self.excluded_features)
        if overlap:
            raise InvalidConfigError(
                f"features {sorted(overlap)} are in the excluded list"
            )
        names = [f.name for f in self.features]
        if len(names) != len(set(names)):
            raise InvalidConfigError("duplicate feature names in schema")

    def encoded_column_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for spec in self.features:
            names.extend(spec.column_names())
        return tuple(names)

    def to_json_dict(self) -> dict:
        features = []
        for spec in self.features:
            entry: dict = {"name": spec.name, "kind": spec.kind.value}
            if spec.kind is FeatureKind.BINNED_NUMERIC:
                entry["bins"] = [
                    {"lower": b.lower, "upper": b.upper, "label": b.label}
                    for b in spec.bins
                ]
                if spec.open_cap is not None:
                    entry["open_cap"] = spec.open_cap
            elif spec.kind is FeatureKind.ORDINAL:
                entry["order"] = list(spec.order)
            elif spec.kind is FeatureKind.CATEGORICAL:
                entry["categories"] = list(spec.categories)
                entry["allow_missing"] = spec.allow_missing
            features.append(entry)
        lookup = {}
        for raw, status in self.status_lookup.items():
            lookup[raw] = {
                "kind": status.kind.value,
                "due_to_fta": status.revocation_due_to_fta,
            }
        return {
            "features": features,
            "excluded_features": list(self.excluded_features),
            "status_lookup": lookup,
            "id_column": self.id_column,
            "status_column": self.status_column,
            "outcome_column": self.outcome_column,
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "FeatureSchema":
        features = []
        for entry in doc.get("features", []):
            kind = FeatureKind(entry["kind"])
            bins = tuple(
                NumericBin(b["lower"], b.get("upper"), b.get("label"))
                for b in entry.get("bins", [])
            )
            features.append(
                FeatureSpec(
                    name=entry["name"],
                    kind=kind,
                    bins=bins,
                    order=tuple(entry.get("order", ())),
                    categories=tuple(entry.get("categories", ())),
                    allow_missing=bool(entry.get("allow_missing", True)),
                    open_cap=entry.get("open_cap"),
                )
            )
        lookup: dict[str, BailStatus] = {}
        for raw, value in doc.get("status_lookup", {}).items():
            if isinstance(value, str):
                lookup[raw] = BailStatus(BailStatusKind(value))
            else:
                lookup[raw] = BailStatus(
                    BailStatusKind(value["kind"]),
                    bool(value.get("due_to_fta", False)),
                )
        return cls(
            features=tuple(features),
            status_lookup=lookup,
            id_column=doc.get("id_column", "case_id"),
            status_column=doc.get("status_column", "bailStatus"),
            outcome_column=doc.get("outcome_column", "fta"),
            excluded_features=tuple(
                doc.get("excluded_features", EXCLUDED_FEATURES)
            ),
        )


def load_schema(path: str | Path) -> FeatureSchema:
    with open(path, "r", encoding="utf-8") as fh:
        return FeatureSchema.from_json_dict(json.load(fh))


def save_schema(schema: FeatureSchema, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class FeatureMatrix:
    """Encoded real-valued feature matrix with named columns.

    Rows align with ``case_ids``; ``values`` is read-only float64.
    """

    values: np.ndarray
    column_names: tuple[str, ...]
    case_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.case_ids), len(self.column_names)):
            raise InvalidConfigError("feature matrix shape does not match its labels")

    @property
    def n_cases(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def take(self, indices: Sequence[int] | np.ndarray) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(
            values=self.values[idx].copy(),
            column_names=self.column_names,
            case_ids=tuple(self.case_ids[i] for i in idx),
        )

    def rows_for(self, case_ids: Sequence[str]) -> "FeatureMatrix":
        position = {cid: i for i, cid in enumerate(self.case_ids)}
        try:
            idx = [position[c] for c in case_ids]
        except KeyError as exc:
            raise SchemaMismatchError(f"case id {exc.args[0]!r} not in matrix") from exc
        return self.take(idx)

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError as exc:
            raise SchemaMismatchError(f"no column named {name!r}") from exc


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in _TRUE_STRINGS:
        return True
    if lowered in _FALSE_STRINGS:
        return False
    raise ValueError(raw)


def load_cases(path: str | Path, schema: FeatureSchema) -> list[CaseRecord]:
    """Load and validate a CSV of cases.

    Every row becomes a :class:`CaseRecord` with its determinacy label
    derived from the bail status. Raises :class:`MissingColumnError`,
    :class:`UnknownBailStatusError`, or :class:`UnparseableValueError`
    naming the offending row and column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = [schema.id_column, schema.status_column, schema.outcome_column]
        required.extend(spec.name for spec in schema.features)
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumnError(f"missing columns {missing} in {path}")

        records: list[CaseRecord] = []
        seen: set[str] = set()
        for row_number, row in enumerate(reader, start=2):
            case_id = (row[schema.id_column] or "").strip()
            if not case_id:
                raise UnparseableValueError(
                    f"row {row_number}, column {schema.id_column!r}: empty case id"
                )
            if case_id in seen:
                raise UnparseableValueError(
                    f"row {row_number}, column {schema.id_column!r}: "
                    f"duplicate case id {case_id!r}"
                )
            seen.add(case_id)

            raw_status = (row[schema.status_column] or "").strip()
            status = schema.status_lookup.get(raw_status)
            if status is None:
                raise UnknownBailStatusError(
                    f"row {row_number}, column {schema.status_column!r}: "
                    f"unknown bail status {raw_status!r}"
                )

            try:
                fta = _parse_bool(row[schema.outcome_column] or "")
            except ValueError:
                raise UnparseableValueError(
                    f"row {row_number}, column {schema.outcome_column!r}: "
                    f"cannot parse {row[schema.outcome_column]!r} as boolean"
                ) from None

            features = {spec.name: (row[spec.name] or "").strip()
                        for spec in schema.features}
            records.append(CaseRecord.create(case_id, features, status, fta))
    return records


def _encode_one(spec: FeatureSpec, raw: str, case_id: str) -> list[float]:
    if spec.kind is FeatureKind.BINNED_NUMERIC:
        if raw == "":
            raise ValueOutOfSchemaError(
                f"case {case_id!r}, feature {spec.name!r}: numeric value missing"
            )
        for bin_ in spec.bins:
            if bin_.matches(raw):
                return [bin_.midpoint(spec.open_cap)]
        raise ValueOutOfSchemaError(
            f"case {case_id!r}, feature {spec.name!r}: no bin matches {raw!r}"
        )
    if spec.kind is FeatureKind.ORDINAL:
        try:
            return [float(spec.order.index(raw))]
        except ValueError:
            raise ValueOutOfSchemaError(
                f"case {case_id!r}, feature {spec.name!r}: "
                f"{raw!r} not in ordinal order"
            ) from None
    if spec.kind is FeatureKind.BOOLEAN:
        try:
            return [1.0 if _parse_bool(raw) else 0.0]
        except ValueError:
            raise ValueOutOfSchemaError(
                f"case {case_id!r}, feature {spec.name!r}: "
                f"{raw!r} is not a boolean"
            ) from None
    # categorical
    width = len(spec.categories) + (1 if spec.allow_missing else 0)
    row = [0.0] * width
    if raw == "":
        if not spec.allow_missing:
            raise ValueOutOfSchemaError(
                f"case {case_id!r}, feature {spec.name!r}: category missing"
            )
        row[-1] = 1.0
        return row
    try:
        row[spec.categories.index(raw)] = 1.0
    except ValueError:
        raise ValueOutOfSchemaError(
            f"case {case_id!r}, feature {spec.name!r}: unknown category {raw!r}"
        ) from None
    return row


def encode_features(cases: Sequence[CaseRecord], schema: FeatureSchema) -> FeatureMatrix:
    """Encode raw case features into a real-valued matrix.

    Column order is fixed by schema declaration order (category order within
    one-hot groups), so repeated runs and permuted inputs produce identical
    columns. Excluded features never appear.
    """
    column_names = schema.encoded_column_names()
    values = np.zeros((len(cases), len(column_names)), dtype=np.float64)
    for i, case in enumerate(cases):
        offset = 0
        for spec in schema.features:
            raw = case.features.get(spec.name, "")
            encoded = _encode_one(spec, raw, case.case_id)
            values[i, offset : offset + len(encoded)] = encoded
            offset += len(encoded)
    return FeatureMatrix(
        values=values,
        column_names=column_names,
        case_ids=tuple(c.case_id for c in cases),
    )


def write_matrix_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    """Dump the encoded matrix for audit."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("case_id",) + matrix.column_names)
        for cid, row in zip(matrix.case_ids, matrix.values):
            writer.writerow([cid] + [repr(float(v)) for v in row])


def write_cases_csv(
    cases: Iterable[CaseRecord],
    schema: FeatureSchema,
    path: str | Path,
    status_strings: Mapping[BailStatus, str] | None = None,
) -> None:
    """Write cases back to the CSV layout that :func:`load_cases` reads.

    ``status_strings`` inverts the schema's status lookup; by default the
    first lookup entry mapping to each status is used.
    """
    if status_strings is None:
        status_strings = {}
        for raw, status in schema.status_lookup.items():
            status_strings.setdefault(status, raw)
    feature_names = [spec.name for spec in schema.features]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [schema.id_column]
            + feature_names
            + [schema.status_column, schema.outcome_column]
        )
        for case in cases:
            try:
                status_raw = status_strings[case.bail_status]
            except KeyError:
                raise InvalidConfigError(
                    f"no raw string for status {case.bail_status}"
                ) from None
            writer.writerow(
                [case.case_id]
                + [case.features.get(name, "") for name in feature_names]
                + [status_raw, "true" if case.fta_observed else "false"]
            )
