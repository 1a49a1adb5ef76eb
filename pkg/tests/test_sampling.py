import numpy as np
import pytest

from bailstudy.domain import BailStatus, BailStatusKind, CaseRecord
from bailstudy.errors import InsufficientCasesError, InsufficientMajorityError
from bailstudy.imputation import TrainingPool
from bailstudy.ingest import FeatureMatrix
from bailstudy.sampling import balanced_subsets, stratified_split

POSTED = BailStatus(BailStatusKind.POSTED)
FORFEITED = BailStatus(BailStatusKind.FORFEITED)


def make_cases(n_negative, n_positive):
    cases = []
    for i in range(n_negative):
        cases.append(CaseRecord.create(f"n{i:06d}", {}, POSTED, False))
    for i in range(n_positive):
        cases.append(CaseRecord.create(f"p{i:06d}", {}, FORFEITED, True))
    return cases


def test_split_is_deterministic():
    cases = make_cases(50, 10)
    a = stratified_split(cases, 0.2, seed=7)
    b = stratified_split(cases, 0.2, seed=7)
    assert a == b
    c = stratified_split(cases, 0.2, seed=8)
    assert set(c.test_ids) != set(a.test_ids)


def test_split_is_input_order_independent():
    cases = make_cases(50, 10)
    shuffled = list(reversed(cases))
    a = stratified_split(cases, 0.2, seed=7)
    b = stratified_split(shuffled, 0.2, seed=7)
    assert set(a.test_ids) == set(b.test_ids)


def test_split_partitions_cases():
    cases = make_cases(40, 8)
    split = stratified_split(cases, 0.25, seed=1)
    assert set(split.train_ids) | set(split.test_ids) == {c.case_id for c in cases}
    assert set(split.train_ids) & set(split.test_ids) == set()


def test_split_four_cases_half():
    cases = make_cases(2, 2)
    split = stratified_split(cases, 0.5, seed=3)
    test_positive = sum(cid.startswith("p") for cid in split.test_ids)
    assert len(split.test_ids) == 2
    assert test_positive == 1


def test_split_matches_reference_counts():
    # 90,732 cases at 3.8% prevalence, 20% held out: 18,147 test cases.
    n_total = 90_732
    n_positive = 3_448
    cases = make_cases(n_total - n_positive, n_positive)
    split = stratified_split(cases, 0.2, seed=0)
    assert len(split.test_ids) == 18_147
    assert len(split.train_ids) == 72_585
    train_rate = sum(c.startswith("p") for c in split.train_ids) / len(split.train_ids)
    test_rate = sum(c.startswith("p") for c in split.test_ids) / len(split.test_ids)
    assert abs(train_rate - test_rate) < 0.005


def test_split_requires_two_cases_per_label():
    with pytest.raises(InsufficientCasesError):
        stratified_split(make_cases(5, 1), 0.2, seed=0)


def make_pool(n_minority, n_majority, minority_label=True):
    n = n_minority + n_majority
    labels = np.zeros(n, dtype=bool)
    labels[:n_minority] = minority_label
    labels[n_minority:] = not minority_label
    ids = tuple(f"c{i:06d}" for i in range(n))
    matrix = FeatureMatrix(
        values=np.arange(n, dtype=np.float64)[:, None],
        column_names=("x",),
        case_ids=ids,
    )
    return TrainingPool(
        matrix=matrix,
        labels=labels,
        weights=np.ones(n),
        determinate=np.ones(n, dtype=bool),
    )


def test_balanced_subsets_contract():
    pool = make_pool(100, 2500)
    subsets = balanced_subsets(pool, 25, seed=5)
    assert len(subsets) == 25
    label_of = dict(zip(pool.case_ids, pool.labels))
    minority_sets = []
    majority_sets = []
    for s in subsets:
        assert len(s.case_ids) == 200
        labels = np.array([label_of[cid] for cid in s.case_ids])
        assert labels.sum() == 100  # exactly half carry the minority label
        minority_sets.append(frozenset(c for c in s.case_ids if label_of[c]))
        majority_sets.append(frozenset(c for c in s.case_ids if not label_of[c]))
    assert len(set(minority_sets)) == 1  # full minority reuse
    union = set()
    total = 0
    for ms in majority_sets:
        union |= ms
        total += len(ms)
    assert len(union) == total  # pairwise disjoint majority slices


def test_balanced_subsets_boundary():
    pool = make_pool(100, 2499)
    with pytest.raises(InsufficientMajorityError) as err:
        balanced_subsets(pool, 25, seed=5)
    assert err.value.required == 2500
    assert err.value.available == 2499


def test_balanced_subsets_deterministic():
    pool = make_pool(30, 300)
    a = balanced_subsets(pool, 10, seed=2)
    b = balanced_subsets(pool, 10, seed=2)
    assert a == b
    c = balanced_subsets(pool, 10, seed=3)
    assert any(x.case_ids != y.case_ids for x, y in zip(a, c))


def test_minority_can_be_the_negative_class():
    pool = make_pool(40, 400, minority_label=False)
    subsets = balanced_subsets(pool, 5, seed=1)
    assert subsets[0].minority_label is False
    label_of = dict(zip(pool.case_ids, pool.labels))
    labels = np.array([label_of[cid] for cid in subsets[0].case_ids])
    assert (~labels).sum() == 40
    assert labels.sum() == 40
