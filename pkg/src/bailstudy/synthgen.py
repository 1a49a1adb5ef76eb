"""Synthetic bail-case generator with known counterfactual outcomes.

Real bail data can never reveal what a detained defendant would have done if
released; this generator can, which makes it the verification oracle for the
imputation strategies. Each case draws tabular features, a true
failure-to-appear propensity (sigmoid of a linear score), and a judge score
that decides detention via a quantile threshold. Detained cases receive
indeterminate bail statuses and their observed outcome is censored except
for rare escape events; released cases reveal their counterfactual outcome
exactly.

With ``confounding_strength=0`` the judge score ignores every
outcome-relevant feature, so detention is independent of the true
propensity; positive values mix the outcome score into the judge score,
reproducing the selection bias that breaks the observed-only strategy.

Detained cases normally show an appearance regardless of their
counterfactual; two mechanisms can still put a failure on record. Escapes
hit any detained case with the flat ``escape_rate``. Revelation is
status-specific (``status_reveal_rates``): a bond-terminated or
partially-paid case may end up released long enough for its counterfactual
outcome to surface, mirroring how such statuses carry real nonzero failure
rates in court data. Reveal rates default to zero, leaving detention a pure
censor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import BailStatus, BailStatusKind, CaseRecord
from .errors import CaseMismatchError, InvalidConfigError
from .imputation import TrainingPool
from .ingest import FeatureKind, FeatureSchema, FeatureSpec, NumericBin

_DETAINED_STATUSES = (
    BailStatus(BailStatusKind.DENIED),
    BailStatus(BailStatusKind.SET),
    BailStatus(BailStatusKind.PARTIAL_POSTING),
    BailStatus(BailStatusKind.BOND_TERMINATED),
    BailStatus(BailStatusKind.REVOKED, revocation_due_to_fta=False),
)
_RELEASED_FTA_STATUSES = (
    BailStatus(BailStatusKind.POSTED),
    BailStatus(BailStatusKind.FORFEITED),
    BailStatus(BailStatusKind.REVOKED, revocation_due_to_fta=True),
)

STATUS_STRINGS = {
    BailStatus(BailStatusKind.POSTED): "posted",
    BailStatus(BailStatusKind.FORFEITED): "forfeited",
    BailStatus(BailStatusKind.REVOKED, True): "revoked_fta",
    BailStatus(BailStatusKind.REVOKED, False): "revoked_other",
    BailStatus(BailStatusKind.DENIED): "denied",
    BailStatus(BailStatusKind.SET): "set",
    BailStatus(BailStatusKind.PARTIAL_POSTING): "partial_posting",
    BailStatus(BailStatusKind.BOND_TERMINATED): "bond_terminated",
}


@dataclass(frozen=True)
class GeneratorConfig:
    n_cases: int
    seed: int = 0
    n_numeric: int = 4
    n_binary: int = 3
    n_categorical: int = 2
    n_categories: int = 4
    n_bins: int = 8
    detention_rate: float = 0.1
    escape_rate: float = 0.0001
    confounding_strength: float = 0.0
    target_fta_rate: float = 0.15
    judge_noise: float = 1.0
    coefficient_scale: float = 1.0
    true_fta_coefficients: tuple[float, ...] | None = None
    judge_coefficients: tuple[float, ...] | None = None
    detained_status_mix: tuple[float, ...] = (0.4, 0.25, 0.1, 0.15, 0.1)
    released_fta_status_mix: tuple[float, ...] = (0.4, 0.4, 0.2)
    # per detained status (denied, set, partial_posting, bond_terminated,
    # revoked_other): probability that the counterfactual outcome surfaces
    status_reveal_rates: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.n_cases < 1:
            raise InvalidConfigError("n_cases must be positive")
        if not 0.0 <= self.detention_rate <= 1.0:
            raise InvalidConfigError("detention_rate must be in [0, 1]")
        if not 0.0 <= self.escape_rate < 1.0:
            raise InvalidConfigError("escape_rate must be in [0, 1)")
        if not 0.0 < self.target_fta_rate < 1.0:
            raise InvalidConfigError("target_fta_rate must be in (0, 1)")
        if self.judge_noise <= 0.0:
            raise InvalidConfigError("judge_noise must be positive")
        if min(self.n_numeric, self.n_binary, self.n_categorical) < 0 or (
            self.n_numeric + self.n_binary + self.n_categorical
        ) < 2:
            raise InvalidConfigError("need at least two features")
        if self.n_bins < 2 or self.n_categories < 2:
            raise InvalidConfigError("bins and categories must be at least 2")
        for mix, width in (
            (self.detained_status_mix, len(_DETAINED_STATUSES)),
            (self.released_fta_status_mix, len(_RELEASED_FTA_STATUSES)),
        ):
            if len(mix) != width or any(v < 0 for v in mix) or sum(mix) <= 0:
                raise InvalidConfigError("status mixes must be non-negative weights")
        if len(self.status_reveal_rates) != len(_DETAINED_STATUSES) or any(
            not 0.0 <= r <= 1.0 for r in self.status_reveal_rates
        ):
            raise InvalidConfigError("status_reveal_rates must be probabilities")

    def to_json_dict(self) -> dict:
        return {
            "n_cases": self.n_cases,
            "seed": self.seed,
            "n_numeric": self.n_numeric,
            "n_binary": self.n_binary,
            "n_categorical": self.n_categorical,
            "n_categories": self.n_categories,
            "n_bins": self.n_bins,
            "detention_rate": self.detention_rate,
            "escape_rate": self.escape_rate,
            "confounding_strength": self.confounding_strength,
            "target_fta_rate": self.target_fta_rate,
            "judge_noise": self.judge_noise,
            "coefficient_scale": self.coefficient_scale,
            "true_fta_coefficients": (
                list(self.true_fta_coefficients)
                if self.true_fta_coefficients is not None
                else None
            ),
            "judge_coefficients": (
                list(self.judge_coefficients)
                if self.judge_coefficients is not None
                else None
            ),
            "detained_status_mix": list(self.detained_status_mix),
            "released_fta_status_mix": list(self.released_fta_status_mix),
            "status_reveal_rates": list(self.status_reveal_rates),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GeneratorConfig":
        kwargs = dict(doc)
        for key in ("true_fta_coefficients", "judge_coefficients"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        for key in ("detained_status_mix", "released_fta_status_mix", "status_reveal_rates"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class SyntheticCase:
    """Public case record plus the hidden ground truth."""

    record: CaseRecord
    true_fta_propensity: float
    counterfactual_fta: bool
    detained: bool


def generator_schema(config: GeneratorConfig) -> FeatureSchema:
    """Ingestion schema matching the generator's CSV export."""
    features = []
    for i in range(config.n_numeric):
        bins = tuple(
            NumericBin(lower=float(j), upper=float(j + 1), label=f"[{j},{j + 1})")
            for j in range(config.n_bins)
        )
        features.append(FeatureSpec(name=f"num{i}", kind=FeatureKind.BINNED_NUMERIC, bins=bins))
    for i in range(config.n_binary):
        features.append(FeatureSpec(name=f"flag{i}", kind=FeatureKind.BOOLEAN))
    for i in range(config.n_categorical):
        features.append(
            FeatureSpec(
                name=f"cat{i}",
                kind=FeatureKind.CATEGORICAL,
                categories=tuple(f"c{j}" for j in range(config.n_categories)),
                allow_missing=False,
            )
        )
    lookup = {raw: status for status, raw in STATUS_STRINGS.items()}
    return FeatureSchema(features=tuple(features), status_lookup=lookup)


def _encoded_layout(config: GeneratorConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Theoretical mean/scale per encoded column plus the owning feature index."""
    means: list[float] = []
    variances: list[float] = []
    owner: list[int] = []
    feature_index = 0
    bins = config.n_bins
    for _ in range(config.n_numeric):
        # midpoints j + 0.5 for a uniform bin index j
        means.append(bins / 2.0)
        variances.append((bins * bins - 1) / 12.0)
        owner.append(feature_index)
        feature_index += 1
    for _ in range(config.n_binary):
        means.append(0.5)
        variances.append(0.25)
        owner.append(feature_index)
        feature_index += 1
    share = 1.0 / config.n_categories
    for _ in range(config.n_categorical):
        for _ in range(config.n_categories):
            means.append(share)
            variances.append(share * (1.0 - share))
            owner.append(feature_index)
        feature_index += 1
    return (
        np.asarray(means),
        np.sqrt(np.asarray(variances)),
        np.asarray(owner, dtype=np.int64),
    )


def _default_coefficients(
    config: GeneratorConfig, owner: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Outcome coefficients live on the first half of the features, judge
    coefficients on the rest, so the two scores are independent unless
    confounding mixes them."""
    n_features = config.n_numeric + config.n_binary + config.n_categorical
    outcome_features = set(range((n_features + 1) // 2))
    w_true = rng.normal(0.0, config.coefficient_scale, owner.size)
    w_judge = rng.normal(0.0, config.coefficient_scale, owner.size)
    outcome_mask = np.array([o in outcome_features for o in owner])
    w_true[~outcome_mask] = 0.0
    w_judge[outcome_mask] = 0.0
    if config.true_fta_coefficients is not None:
        w_true = np.asarray(config.true_fta_coefficients, dtype=np.float64)
        if w_true.shape != (owner.size,):
            raise InvalidConfigError(
                f"true_fta_coefficients must have {owner.size} entries"
            )
    if config.judge_coefficients is not None:
        w_judge = np.asarray(config.judge_coefficients, dtype=np.float64)
        if w_judge.shape != (owner.size,):
            raise InvalidConfigError(f"judge_coefficients must have {owner.size} entries")
    return w_true, w_judge


def _calibrate_intercept(scores: np.ndarray, target_rate: float) -> float:
    lo, hi = -30.0, 30.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.mean(1.0 / (1.0 + np.exp(-(scores + mid)))) < target_rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate(config: GeneratorConfig) -> list[SyntheticCase]:
    """Draw a fully seeded population of cases with hidden ground truth."""
    rng = np.random.default_rng(config.seed)
    n = config.n_cases

    numeric = rng.integers(0, config.n_bins, size=(n, config.n_numeric))
    binary = rng.integers(0, 2, size=(n, config.n_binary))
    categorical = rng.integers(0, config.n_categories, size=(n, config.n_categorical))

    means, scales, owner = _encoded_layout(config)
    p_enc = owner.size
    encoded = np.empty((n, p_enc), dtype=np.float64)
    col = 0
    for i in range(config.n_numeric):
        encoded[:, col] = numeric[:, i] + 0.5
        col += 1
    for i in range(config.n_binary):
        encoded[:, col] = binary[:, i]
        col += 1
    for i in range(config.n_categorical):
        onehot = np.zeros((n, config.n_categories))
        onehot[np.arange(n), categorical[:, i]] = 1.0
        encoded[:, col : col + config.n_categories] = onehot
        col += config.n_categories
    z = (encoded - means) / scales

    w_true, w_judge = _default_coefficients(config, owner, rng)
    true_score = z @ w_true
    intercept = _calibrate_intercept(true_score, config.target_fta_rate)
    propensity = 1.0 / (1.0 + np.exp(-(true_score + intercept)))

    counterfactual = rng.random(n) < propensity
    judge_score = (
        z @ w_judge
        + config.confounding_strength * true_score
        + rng.logistic(0.0, config.judge_noise, n)
    )
    escape_u = rng.random(n)
    reveal_u = rng.random(n)
    status_u = rng.random(n)

    n_detained = int(round(config.detention_rate * n))
    detained = np.zeros(n, dtype=bool)
    if n_detained > 0:
        order = np.argsort(-judge_score, kind="stable")
        detained[order[:n_detained]] = True

    detained_cum = np.cumsum(np.asarray(config.detained_status_mix, dtype=np.float64))
    detained_cum /= detained_cum[-1]
    released_cum = np.cumsum(np.asarray(config.released_fta_status_mix, dtype=np.float64))
    released_cum /= released_cum[-1]
    reveal_rates = np.asarray(config.status_reveal_rates, dtype=np.float64)

    width = len(str(n - 1))
    cases: list[SyntheticCase] = []
    for i in range(n):
        features: dict[str, str] = {}
        for j in range(config.n_numeric):
            lo = int(numeric[i, j])
            features[f"num{j}"] = f"[{lo},{lo + 1})"
        for j in range(config.n_binary):
            features[f"flag{j}"] = "true" if binary[i, j] else "false"
        for j in range(config.n_categorical):
            features[f"cat{j}"] = f"c{int(categorical[i, j])}"

        if detained[i]:
            pick = int(np.searchsorted(detained_cum, status_u[i], side="right"))
            pick = min(pick, len(_DETAINED_STATUSES) - 1)
            status = _DETAINED_STATUSES[pick]
            if reveal_u[i] < reveal_rates[pick]:
                fta = bool(counterfactual[i])
            else:
                fta = bool(escape_u[i] < config.escape_rate)
        elif counterfactual[i]:
            pick = int(np.searchsorted(released_cum, status_u[i], side="right"))
            status = _RELEASED_FTA_STATUSES[min(pick, len(_RELEASED_FTA_STATUSES) - 1)]
            fta = True
        else:
            status = BailStatus(BailStatusKind.POSTED)
            fta = False

        record = CaseRecord.create(
            case_id=f"case{i:0{width}d}",
            features=features,
            bail_status=status,
            fta_observed=fta,
        )
        cases.append(
            SyntheticCase(
                record=record,
                true_fta_propensity=float(propensity[i]),
                counterfactual_fta=bool(counterfactual[i]),
                detained=bool(detained[i]),
            )
        )
    return cases


def records(cases: Sequence[SyntheticCase]) -> list[CaseRecord]:
    return [c.record for c in cases]


def write_truth_csv(cases: Sequence[SyntheticCase], path: str | Path) -> None:
    """Ground-truth companion file, keyed by case id."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["case_id", "true_fta_propensity", "counterfactual_fta", "detained"]
        )
        for case in cases:
            writer.writerow(
                [
                    case.record.case_id,
                    repr(case.true_fta_propensity),
                    "true" if case.counterfactual_fta else "false",
                    "true" if case.detained else "false",
                ]
            )


@dataclass(frozen=True)
class ImputationQualityReport:
    """How well an imputed pool recovers the hidden counterfactuals."""

    n_cases: int
    n_indeterminate_retained: int
    label_recovery_accuracy: float | None
    weighted_label_mean: float
    population_counterfactual_rate: float

    @property
    def weighted_label_bias(self) -> float:
        return self.weighted_label_mean - self.population_counterfactual_rate


def oracle_metrics(
    cases: Sequence[SyntheticCase], pool: TrainingPool
) -> ImputationQualityReport:
    """Score a pool's labels and weights against the generator's ground truth."""
    truth = {c.record.case_id: c for c in cases}
    missing = [cid for cid in pool.case_ids if cid not in truth]
    if missing:
        raise CaseMismatchError(
            f"pool contains {len(missing)} unknown case ids, e.g. {missing[0]!r}"
        )
    indet_idx = np.flatnonzero(~pool.determinate)
    recovery: float | None = None
    if indet_idx.size:
        hits = sum(
            pool.labels[i] == truth[pool.case_ids[i]].counterfactual_fta
            for i in indet_idx
        )
        recovery = hits / indet_idx.size
    weighted_mean = float(
        np.dot(pool.weights, pool.labels.astype(np.float64)) / pool.weights.sum()
    )
    population_rate = float(np.mean([c.counterfactual_fta for c in cases]))
    return ImputationQualityReport(
        n_cases=pool.n_cases,
        n_indeterminate_retained=int(indet_idx.size),
        label_recovery_accuracy=recovery,
        weighted_label_mean=weighted_mean,
        population_counterfactual_rate=population_rate,
    )
