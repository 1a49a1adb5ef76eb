import numpy as np
import pytest

from bailstudy.domain import BailStatusKind, LabelStatus
from bailstudy.errors import CaseMismatchError, InvalidConfigError
from bailstudy.imputation import (
    build_raw_pool,
    impute_corr,
    impute_daf,
    impute_nn,
    impute_obs,
)
from bailstudy.ingest import encode_features
from bailstudy.synthgen import (
    GeneratorConfig,
    generate,
    generator_schema,
    oracle_metrics,
    records,
)


def make_pool(cases, config):
    schema = generator_schema(config)
    matrix = encode_features(records(cases), schema)
    return build_raw_pool(records(cases), matrix)


def test_determinism_per_seed():
    config = GeneratorConfig(n_cases=300, seed=42, detention_rate=0.2)
    assert generate(config) == generate(config)
    other = generate(GeneratorConfig(n_cases=300, seed=43, detention_rate=0.2))
    assert other != generate(config)


def test_detained_fraction_and_status_taxonomy():
    config = GeneratorConfig(n_cases=1000, seed=7, detention_rate=0.3, escape_rate=0.02)
    cases = generate(config)
    detained = [c for c in cases if c.detained]
    released = [c for c in cases if not c.detained]
    assert len(detained) == 300
    assert all(c.record.label_status is LabelStatus.INDETERMINATE for c in detained)
    assert all(c.record.label_status is LabelStatus.DETERMINATE for c in released)
    # detained statuses span the indeterminate taxonomy, including the
    # revoked-for-other-reasons split
    kinds = {c.record.bail_status.kind for c in detained}
    assert BailStatusKind.DENIED in kinds
    assert BailStatusKind.REVOKED in kinds


def test_released_cases_reveal_their_counterfactual():
    config = GeneratorConfig(n_cases=800, seed=3, detention_rate=0.25, escape_rate=0.1)
    for case in generate(config):
        if not case.detained:
            assert case.record.fta_observed == case.counterfactual_fta


def test_zero_confounding_balances_propensity():
    config = GeneratorConfig(
        n_cases=20_000, seed=11, detention_rate=0.3, confounding_strength=0.0
    )
    cases = generate(config)
    detained = np.array([c.true_fta_propensity for c in cases if c.detained])
    released = np.array([c.true_fta_propensity for c in cases if not c.detained])
    pooled_sd = np.std(np.concatenate([detained, released]))
    stderr = pooled_sd * np.sqrt(1 / detained.size + 1 / released.size)
    assert abs(detained.mean() - released.mean()) < 5 * stderr


def test_positive_confounding_biases_the_determinate_stratum():
    config = GeneratorConfig(
        n_cases=20_000, seed=13, detention_rate=0.3, confounding_strength=2.0
    )
    cases = generate(config)
    determinate_fta = np.mean(
        [c.counterfactual_fta for c in cases if not c.detained]
    )
    population_fta = np.mean([c.counterfactual_fta for c in cases])
    assert determinate_fta < population_fta  # judge removed the high-risk tail


def test_zero_detention_rate_makes_obs_equal_corr():
    config = GeneratorConfig(n_cases=400, seed=5, detention_rate=0.0)
    cases = generate(config)
    assert all(c.record.is_determinate for c in cases)
    pool = make_pool(cases, config)
    corr = impute_corr(pool)
    obs = impute_obs(pool)
    assert obs.case_ids == corr.case_ids
    assert np.array_equal(obs.labels, corr.labels)
    assert np.array_equal(obs.weights, corr.weights)


def test_escape_rate_calibration():
    # 100k detained draws: the observed detained-FTA fraction matches the
    # configured escape rate within binomial tolerance
    config = GeneratorConfig(
        n_cases=200_000,
        seed=17,
        detention_rate=0.5,
        escape_rate=0.0001,
        confounding_strength=1.0,
    )
    cases = generate(config)
    detained = [c for c in cases if c.detained]
    assert len(detained) == 100_000
    observed = np.mean([c.record.fta_observed for c in detained])
    # binomial sd of the rate estimate at p = 1e-4, n = 1e5
    sd = np.sqrt(0.0001 * 0.9999 / 100_000)
    assert abs(observed - 0.0001) < 5 * sd


def test_status_revelation_surfaces_counterfactuals():
    config = GeneratorConfig(
        n_cases=50_000,
        seed=19,
        detention_rate=0.4,
        escape_rate=0.0,
        confounding_strength=1.0,
        status_reveal_rates=(0.0, 0.5, 0.5, 0.8, 0.0),
    )
    cases = generate(config)
    detained = [c for c in cases if c.detained]
    # denied cases stay fully censored when escapes are off
    denied = [c for c in detained if c.record.bail_status.kind is BailStatusKind.DENIED]
    assert not any(c.record.fta_observed for c in denied)
    # revealed outcomes equal the counterfactual, so they track propensity
    observed_fta = [c.true_fta_propensity for c in detained if c.record.fta_observed]
    censored = [c.true_fta_propensity for c in detained if not c.record.fta_observed]
    assert len(observed_fta) > 100
    assert np.mean(observed_fta) > np.mean(censored)
    for c in detained:
        if c.record.fta_observed:
            assert c.counterfactual_fta


def test_oracle_metrics_constructed_agreement_and_disagreement():
    # force every detained counterfactual to be a true failure to appear
    config = GeneratorConfig(
        n_cases=3000,
        seed=23,
        detention_rate=0.2,
        escape_rate=0.0,
        confounding_strength=4.0,
        target_fta_rate=0.3,
        judge_noise=0.1,
    )
    cases = generate(config)
    forced = []
    from dataclasses import replace

    for c in cases:
        if c.detained:
            forced.append(replace(c, counterfactual_fta=True))
        else:
            forced.append(c)
    pool = make_pool(cases, config)
    daf_report = oracle_metrics(forced, impute_daf(pool))
    assert daf_report.label_recovery_accuracy == 1.0
    corr_report = oracle_metrics(forced, impute_corr(pool))
    assert corr_report.label_recovery_accuracy == 0.0
    obs_report = oracle_metrics(forced, impute_obs(pool))
    assert obs_report.label_recovery_accuracy is None
    assert obs_report.n_indeterminate_retained == 0


def test_oracle_metrics_nn_recovery_with_deterministic_outcomes():
    # one steep numeric feature determines the outcome, so propensities sit
    # at the extremes and neighborhoods share their outcome region
    config = GeneratorConfig(
        n_cases=4000,
        seed=29,
        n_numeric=1,
        n_binary=1,
        n_categorical=0,
        detention_rate=0.25,
        escape_rate=0.0,
        confounding_strength=1.0,
        target_fta_rate=0.4,
        true_fta_coefficients=(20.0, 0.0),
        judge_coefficients=(0.0, 1.0),
    )
    cases = generate(config)
    propensities = np.array([c.true_fta_propensity for c in cases])
    assert np.mean((propensities < 0.05) | (propensities > 0.95)) > 0.7
    pool = make_pool(cases, config)
    report = oracle_metrics(cases, impute_nn(pool, k=15))
    assert report.label_recovery_accuracy > 0.9


def test_oracle_metrics_case_mismatch():
    config = GeneratorConfig(n_cases=50, seed=1, detention_rate=0.2)
    cases = generate(config)
    pool = make_pool(cases, config)
    with pytest.raises(CaseMismatchError):
        oracle_metrics(cases[:10], pool)


def test_weighted_label_bias_sign_under_confounding():
    config = GeneratorConfig(
        n_cases=20_000,
        seed=31,
        detention_rate=0.3,
        escape_rate=0.001,
        confounding_strength=2.0,
    )
    cases = generate(config)
    pool = make_pool(cases, config)
    report = oracle_metrics(cases, impute_obs(pool))
    # observed-only training underestimates the population failure rate
    assert report.weighted_label_bias < 0.0


def test_invalid_configs_rejected():
    with pytest.raises(InvalidConfigError):
        GeneratorConfig(n_cases=0)
    with pytest.raises(InvalidConfigError):
        GeneratorConfig(n_cases=10, detention_rate=1.5)
    with pytest.raises(InvalidConfigError):
        GeneratorConfig(n_cases=10, escape_rate=1.0)
    with pytest.raises(InvalidConfigError):
        GeneratorConfig(n_cases=10, judge_noise=0.0)


def test_config_json_round_trip():
    config = GeneratorConfig(
        n_cases=123, seed=9, detention_rate=0.2, true_fta_coefficients=None
    )
    doc = config.to_json_dict()
    assert GeneratorConfig.from_json_dict(doc) == config
